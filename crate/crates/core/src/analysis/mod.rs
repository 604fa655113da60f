//! Evaluation instruments: corpus BLEU-4, attention-entropy curves,
//! adjacent-sentence coherence from word vectors, and the gated model's
//! ablation modes.

mod ablation;
mod bleu;
mod coherence;
mod entropy;

pub use ablation::{ablate, AblationMode};
pub use bleu::{bleu4, BleuScore, Smoothing};
pub use coherence::{
    document_coherence, load_word_vectors, sentence_similarity, CoherenceReport, WordVectors,
};
pub use entropy::{attention_entropy, entropy, EntropyCurve};
