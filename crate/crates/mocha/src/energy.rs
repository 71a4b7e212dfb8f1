//! Attention energy functions and the memory they address.
//!
//! Two energy flavors exist. The additive (tanh) form drives standard soft
//! attention:
//!
//! ```text
//! e_j = v . tanh(W_h h_j + W_s s + b)
//! ```
//!
//! The normalized form replaces v with a unit direction scaled by a learned
//! gain and adds a learned offset, which keeps the logistic that follows it
//! well-conditioned:
//!
//! ```text
//! e_j = g (v / ||v||) . tanh(W_h h_j + W_s s + b) + r
//! ```
//!
//! Both come with a prepared per-query form so online decoders can evaluate
//! a single memory entry at a time without touching entries ahead of the
//! cursor and without allocating per evaluation.

use crate::error::{Error, Result};
use crate::tensor::{dot, Tensor};
use rand::Rng;

/// Default offset for the normalized energy. Biasing energies negative makes
/// the selection probabilities start near zero, which stops the monotonic
/// cursor from racing ahead early in training.
pub const DEFAULT_ENERGY_OFFSET: f64 = -4.0;

/// Encoder hidden states, one row per input position; the addressable store
/// every attention mechanism reads from.
#[derive(Debug, Clone)]
pub struct Memory {
    states: Tensor,
}

impl Memory {
    pub fn new(states: Tensor) -> Result<Self> {
        if states.rows() == 0 {
            return Err(Error::ShapeMismatch { context: "memory", expected: 1, actual: 0 });
        }
        if !states.is_finite() {
            return Err(Error::NonFinite("memory"));
        }
        Ok(Memory { states })
    }

    /// Number of memory entries T.
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.rows() == 0
    }

    /// Hidden dimensionality of each entry.
    pub fn dim(&self) -> usize {
        self.states.cols()
    }

    pub fn entry(&self, j: usize) -> &[f64] {
        self.states.row(j)
    }

    pub fn states(&self) -> &Tensor {
        &self.states
    }
}

/// Decoder state used as the attention query.
#[derive(Debug, Clone)]
pub struct DecoderQuery {
    state: Vec<f64>,
}

impl DecoderQuery {
    pub fn new(state: Vec<f64>) -> Result<Self> {
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("decoder query"));
        }
        Ok(DecoderQuery { state })
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }
}

/// Weights of the additive energy function.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AdditiveEnergyParams {
    /// d x d_h
    pub w_h: Tensor,
    /// d x d_s
    pub w_s: Tensor,
    /// length d
    pub b: Vec<f64>,
    /// length d
    pub v: Vec<f64>,
}

impl AdditiveEnergyParams {
    pub fn new(w_h: Tensor, w_s: Tensor, b: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let d = w_h.rows();
        if w_s.rows() != d {
            return Err(Error::ShapeMismatch { context: "W_s rows", expected: d, actual: w_s.rows() });
        }
        if b.len() != d {
            return Err(Error::ShapeMismatch { context: "bias b", expected: d, actual: b.len() });
        }
        if v.len() != d {
            return Err(Error::ShapeMismatch { context: "gain v", expected: d, actual: v.len() });
        }
        let params = AdditiveEnergyParams { w_h, w_s, b, v };
        if !params.is_finite() {
            return Err(Error::NonFinite("energy parameters"));
        }
        Ok(params)
    }

    /// Glorot-style init: weights uniform in +-sqrt(6/(fan_in+fan_out)),
    /// biases zero.
    pub fn init<R: Rng>(d: usize, d_h: usize, d_s: usize, rng: &mut R) -> Self {
        let mut uniform = |rows: usize, cols: usize| {
            let s = (6.0 / (rows + cols) as f64).sqrt();
            Tensor::from_vec(
                (0..rows * cols).map(|_| rng.gen_range(-s..s)).collect(),
                rows,
                cols,
            )
        };
        let w_h = uniform(d, d_h);
        let w_s = uniform(d, d_s);
        let v_scale = (6.0 / (d + 1) as f64).sqrt();
        let v = (0..d).map(|_| rng.gen_range(-v_scale..v_scale)).collect();
        AdditiveEnergyParams { w_h, w_s, b: vec![0.0; d], v }
    }

    /// Energy hidden dimensionality d.
    pub fn dim(&self) -> usize {
        self.w_h.rows()
    }

    pub fn memory_dim(&self) -> usize {
        self.w_h.cols()
    }

    pub fn query_dim(&self) -> usize {
        self.w_s.cols()
    }

    fn is_finite(&self) -> bool {
        self.w_h.is_finite()
            && self.w_s.is_finite()
            && self.b.iter().all(|x| x.is_finite())
            && self.v.iter().all(|x| x.is_finite())
    }

    /// Precompute the query-dependent part, leaving per-entry evaluation
    /// allocation-free.
    pub fn prepare<'a>(&'a self, query: &DecoderQuery) -> Result<PreparedEnergy<'a>> {
        if query.state().len() != self.query_dim() {
            return Err(Error::ShapeMismatch {
                context: "query state",
                expected: self.query_dim(),
                actual: query.state().len(),
            });
        }
        let mut pre = self.b.clone();
        for (a, p) in pre.iter_mut().enumerate() {
            *p += dot(self.w_s.row(a), query.state());
        }
        Ok(PreparedEnergy { w_h: &self.w_h, pre, v_eff: self.v.clone(), offset: 0.0 })
    }

    /// All T energies for one query.
    pub fn energies(&self, query: &DecoderQuery, memory: &Memory) -> Result<Vec<f64>> {
        let prepared = self.prepare(query)?;
        (0..memory.len()).map(|j| prepared.energy(memory, j)).collect()
    }
}

/// Additive energy with a normalized gain direction, learned scale g, and
/// learned offset r.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct NormalizedEnergyParams {
    pub base: AdditiveEnergyParams,
    pub g: f64,
    pub r: f64,
}

impl NormalizedEnergyParams {
    pub fn new(base: AdditiveEnergyParams, g: f64, r: f64) -> Result<Self> {
        if norm(&base.v) == 0.0 {
            return Err(Error::ZeroNormGain);
        }
        Ok(NormalizedEnergyParams { base, g, r })
    }

    /// Init with g = 1/sqrt(d) and a configurable offset r.
    pub fn init<R: Rng>(d: usize, d_h: usize, d_s: usize, r: f64, rng: &mut R) -> Self {
        let base = AdditiveEnergyParams::init(d, d_h, d_s, rng);
        NormalizedEnergyParams { base, g: 1.0 / (d as f64).sqrt(), r }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn prepare<'a>(&'a self, query: &DecoderQuery) -> Result<PreparedEnergy<'a>> {
        let n = norm(&self.base.v);
        if n == 0.0 {
            return Err(Error::ZeroNormGain);
        }
        let mut prepared = self.base.prepare(query)?;
        for v in prepared.v_eff.iter_mut() {
            *v *= self.g / n;
        }
        prepared.offset = self.r;
        Ok(prepared)
    }

    pub fn energies(&self, query: &DecoderQuery, memory: &Memory) -> Result<Vec<f64>> {
        let prepared = self.prepare(query)?;
        (0..memory.len()).map(|j| prepared.energy(memory, j)).collect()
    }
}

/// A query-bound energy function: `energy(memory, j)` touches only memory
/// entry j, costs one d x d_h matvec, and performs no heap allocation.
pub struct PreparedEnergy<'a> {
    w_h: &'a Tensor,
    pre: Vec<f64>,
    v_eff: Vec<f64>,
    offset: f64,
}

impl PreparedEnergy<'_> {
    pub fn energy(&self, memory: &Memory, j: usize) -> Result<f64> {
        let h = memory.entry(j);
        if h.len() != self.w_h.cols() {
            return Err(Error::ShapeMismatch {
                context: "memory entry",
                expected: self.w_h.cols(),
                actual: h.len(),
            });
        }
        let mut e = self.offset;
        for (a, (&pre, &v)) in self.pre.iter().zip(&self.v_eff).enumerate() {
            e += v * (dot(self.w_h.row(a), h) + pre).tanh();
        }
        Ok(e)
    }
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
