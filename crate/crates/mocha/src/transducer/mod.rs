//! A desk-scale encoder–decoder with interchangeable attention mechanisms,
//! trained on synthetic transduction tasks.
//!
//! The encoder is a single unidirectional gated recurrent layer, so memory
//! entry j depends only on inputs up to j and the whole model stays usable
//! online. The decoder attends with one of the four mechanisms and is
//! trained with teacher forcing on the expected context; decoding is greedy
//! and uses the hard online attention process.

mod model;
mod run;
mod task;
mod train;

pub use model::{AlignmentTrace, GruParams, ModelParams, Transduction};
pub use run::{load_model, save_run, RunArtifacts};
pub use task::{Dataset, TaskKind, TaskSpec};
pub use train::{
    collect_gradients, free_running_exact_accuracy, gradient_check, teacher_forced_accuracy,
    train, GradientCheckReport, TrainOptions, TrainOutcome, TrainRecord,
};

use serde::{Deserialize, Serialize};

/// Which attention mechanism the model uses; everything else is identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    Soft,
    Monotonic,
    Mocha { width: usize },
    Matcha,
}

impl Mechanism {
    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Soft => "soft",
            Mechanism::Monotonic => "monotonic",
            Mechanism::Mocha { .. } => "mocha",
            Mechanism::Matcha => "matcha",
        }
    }

    /// Chunk width for the CSV / CLI convention: 0 for soft attention,
    /// 1 for hard monotonic, w for mocha, 0 for matcha (adaptive).
    pub fn width_code(&self) -> usize {
        match self {
            Mechanism::Soft | Mechanism::Matcha => 0,
            Mechanism::Monotonic => 1,
            Mechanism::Mocha { width } => *width,
        }
    }
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mechanism::Mocha { width } => write!(f, "mocha(w={width})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Start-of-sequence token id.
pub const START: usize = 0;
/// End-of-sequence token id.
pub const END: usize = 1;
/// First usable data token id.
pub const FIRST_SYMBOL: usize = 2;

/// Model hyperparameters. Defaults are the desk-scale setting used across
/// the test suite: big enough to learn the synthetic tasks, small enough
/// that a full training run takes seconds to minutes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Encoder hidden size (memory entry dimensionality).
    pub d_h: usize,
    /// Decoder hidden size.
    pub d_s: usize,
    /// Attention energy hidden size.
    pub d_attn: usize,
    /// Token embedding size.
    pub d_embed: usize,
    /// Vocabulary size, including the START and END sentinels.
    pub vocab: usize,
    pub mechanism: Mechanism,
    /// Pre-sigmoid noise level during training (0 disables noise).
    pub sigma: f64,
    pub seed: u64,
    /// Initial offset r of the normalized energies. Negative values keep
    /// early selection probabilities low so the cursor does not race ahead.
    pub energy_offset: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_h: 32,
            d_s: 32,
            d_attn: 16,
            d_embed: 16,
            vocab: 16,
            mechanism: Mechanism::Mocha { width: 2 },
            sigma: 1.0,
            seed: 0,
            energy_offset: -1.0,
        }
    }
}

impl ModelConfig {
    /// A reduced geometry for gradient checks, where every coordinate of
    /// every parameter group is finite-differenced.
    pub fn tiny(mechanism: Mechanism, seed: u64) -> Self {
        ModelConfig {
            d_h: 8,
            d_s: 8,
            d_attn: 4,
            d_embed: 4,
            vocab: 8,
            mechanism,
            sigma: 0.0,
            seed,
            energy_offset: -1.0,
        }
    }
}
