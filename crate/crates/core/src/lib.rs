//! Document-context neural machine translation with an inter-sentence gate.
//!
//! The toolkit trains an attention-based GRU encoder-decoder in two modes:
//! a sentence-level baseline, and a gated variant that encodes the preceding
//! source sentence alongside the current one and mixes both attention
//! contexts into the decoder state through a learned element-wise gate.
//! Supporting pieces: a minimal reverse-mode autodiff tape, document corpus
//! preprocessing, Adadelta training with a pretraining hand-off from the
//! baseline, beam-search decoding that threads each sentence's source into
//! the next sentence's context, and evaluation instruments (BLEU, attention
//! entropy, adjacent-sentence coherence, ablations).

pub mod analysis;
pub mod cli;
pub mod data;
pub mod decoding;
mod error;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
