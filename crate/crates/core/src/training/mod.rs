//! Adadelta optimization, gradient clipping, the epoch loop, and the
//! baseline-to-gated pretraining hand-off.

mod adadelta;
mod trainer;

pub use adadelta::{adadelta_update, clip_global_norm, AdadeltaState};
pub use trainer::{mean_token_nll, pretrain_init, train, EpochStats, TrainOutcome};

use crate::model::Mode;

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub mode: Mode,
    /// Emit a checkpoint every this many epochs (0 disables periodic
    /// checkpoints; the final one is always written by the caller).
    pub checkpoint_every: usize,
    pub dropout: f64,
    pub max_len: usize,
    /// Adadelta decay.
    pub rho: f64,
    /// Adadelta stabilizer.
    pub eps: f64,
    /// Global-norm gradient clip threshold.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 80,
            max_epochs: 10,
            seed: 1,
            mode: Mode::Baseline,
            checkpoint_every: 0,
            dropout: 0.5,
            max_len: 50,
            rho: 0.95,
            eps: 1e-6,
            clip_norm: 1.0,
        }
    }
}
