//! Monotonic and chunkwise attention mechanisms for streaming
//! sequence-to-sequence transduction.
//!
//! The crate provides four attention mechanisms behind one set of kernels:
//!
//! - **soft**: standard softmax attention over the whole memory;
//! - **monotonic**: a hard left-to-right cursor with an expected
//!   (differentiable) training-time distribution;
//! - **mocha**: soft attention over a fixed-width chunk ending at the
//!   monotonic stop position;
//! - **matcha**: soft attention over the adaptive span between consecutive
//!   stop positions.
//!
//! Training-time distributions are built from parallel-scan primitives
//! ([`scan`]); decoding is online and linear-time, with lazily supplied
//! energies so nothing ahead of the cursor is ever touched. A small
//! reverse-mode tape ([`autodiff`]) powers a desk-scale encoder–decoder
//! ([`transducer`]) for end-to-end experiments, and [`bench`] measures
//! decode cost against sequence length.
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `mocha` binary for the `bench` / `train` / `eval` command-line
//! entry points.

pub mod attention;
pub mod autodiff;
pub mod bench;
pub mod chunkwise;
pub mod cli;
pub mod energy;
pub mod error;
pub mod plot;
pub mod scan;
pub mod tensor;
pub mod transducer;

pub use attention::{
    monotonic_alpha_row, monotonic_decode_step, selection_probabilities, soft_attention,
    AttentionRow, NoiseConfig, Role,
};
pub use chunkwise::{
    matcha_beta_row, matcha_decode_step, mocha_beta_row, mocha_decode_step, ChunkConfig,
};
pub use energy::{AdditiveEnergyParams, DecoderQuery, Memory, NormalizedEnergyParams};
pub use error::{Error, Result};
pub use tensor::Tensor;
