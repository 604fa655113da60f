//! The translation models: a bidirectional GRU encoder with feedback
//! attention (the sentence-level baseline) and the gated variant that also
//! encodes the preceding source sentence and mixes both attention contexts
//! into the decoder state through an element-wise inter-sentence gate.

mod attention;
pub mod checkpoint;
mod decoder;
mod encoder;
mod gru;
mod params;

pub use attention::attend;
pub use checkpoint::CheckpointMeta;
pub use decoder::{
    baseline_decoder_step, decoder_init, feedback_state, gate, isg_decoder_step, output_probs,
    sentence_nll, sentence_nll_graph, DecoderTrace, Dropout, GateForce, StepOverrides, StepState,
    TraceStep,
};
pub use encoder::{encode, EncodedSentence};
pub use gru::gru_step;
pub use params::{
    AttentionParams, AttentionValues, GruParams, GruValues, IsgParams, IsgValues, Mode,
    ModeParams, ModeValues, ModelDims, ModelParams, OutputParams, OutputValues, ParamValues,
};
