//! Soft attention and hard monotonic attention, in both training (expected
//! distribution) and decoding (online cursor) forms.
//!
//! The training-time monotonic distribution solves the recursion
//!
//! ```text
//! alpha[i][j] = p[i][j] * ((1 - p[i][j-1]) * alpha[i][j-1] / p[i][j-1] + alpha[i-1][j])
//! ```
//!
//! in closed form with parallel-scan primitives:
//!
//! ```text
//! alpha = p * cumprod_exclusive(1 - p) * cumsum(prev_alpha / cumprod_exclusive(1 - p))
//! ```
//!
//! By convention the step-0 "previous" row is one-hot on index 0 and the
//! decode cursor starts at index 0, so training and decoding agree about
//! where scanning begins.

use crate::energy::Memory;
use crate::scan::{cumprod_exclusive, cumsum_inclusive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Selection probabilities are kept strictly inside (0, 1).
pub const P_CLAMP: f64 = 1e-12;

/// Floor applied to the survival cumprod before it is divided by. It only
/// engages once the survival product has collapsed past any value a clamped
/// p can reach over criterion-scale rows; its job is to keep 1/cumprod
/// finite, not to reshape the distribution.
pub const SURVIVAL_FLOOR: f64 = 1e-250;

/// What a length-T row of attention probabilities means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Softmax weights; sums to 1.
    Soft,
    /// Monotonic stop distribution; sums to at most 1, the deficit being
    /// the probability of never stopping.
    Monotonic,
    /// Chunkwise distribution; same mass budget as the monotonic row that
    /// induced it.
    Chunkwise,
}

/// A validated row of attention probabilities for one output step.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRow {
    probs: Vec<f64>,
    role: Role,
}

pub const MASS_TOLERANCE: f64 = 1e-8;

impl AttentionRow {
    /// Wrap a probability row, checking the mass invariant for its role.
    /// Panics on violation: rows are produced by the kernels, so a bad row
    /// is a bug, not user input.
    pub fn new(probs: Vec<f64>, role: Role) -> Self {
        let sum: f64 = probs.iter().sum();
        for (j, &p) in probs.iter().enumerate() {
            assert!(p >= 0.0 && p.is_finite(), "attention weight [{j}] = {p} invalid");
        }
        match role {
            Role::Soft => assert!(
                (sum - 1.0).abs() <= MASS_TOLERANCE,
                "soft attention row must sum to 1, got {sum}"
            ),
            Role::Monotonic | Role::Chunkwise => assert!(
                sum <= 1.0 + MASS_TOLERANCE,
                "stopping mass cannot exceed 1, got {sum}"
            ),
        }
        AttentionRow { probs, role }
    }

    /// Monotonic row with all mass on one index; `one_hot(0, t)` is the
    /// conventional step-0 predecessor.
    pub fn one_hot(index: usize, len: usize) -> Self {
        assert!(index < len, "one-hot index {index} out of range {len}");
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        AttentionRow { probs, role: Role::Monotonic }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Total stopping mass of the row.
    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Expected context under this row: sum_j probs[j] * memory[j].
    pub fn expected_context(&self, memory: &Memory) -> Vec<f64> {
        assert_eq!(self.len(), memory.len(), "row length must match memory");
        let mut ctx = vec![0.0; memory.dim()];
        for (j, &w) in self.probs.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (c, h) in ctx.iter_mut().zip(memory.entry(j)) {
                *c += w * h;
            }
        }
        ctx
    }
}

/// Pre-sigmoid Gaussian noise configuration. sigma = 1 reproduces the
/// discreteness-encouraging training regime; sigma = 0 makes the pipeline
/// deterministic for gradient checking.
#[derive(Debug, Clone, Copy)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(sigma: f64, seed: u64) -> Self {
        assert!(sigma >= 0.0, "noise sigma must be nonnegative");
        NoiseConfig { sigma, seed }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Numerically stable logistic sigmoid.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Selection probabilities p = logistic(e + noise), clamped into
/// `[P_CLAMP, 1 - P_CLAMP]`. Noise is drawn from the seeded generator only
/// on the training path.
pub fn selection_probabilities(energies: &[f64], noise: &NoiseConfig, training: bool) -> Vec<f64> {
    if training && noise.sigma > 0.0 {
        let mut rng = noise.rng();
        selection_probabilities_with(energies, noise.sigma, &mut rng)
    } else {
        energies.iter().map(|&e| clamp_p(logistic(e))).collect()
    }
}

/// Streaming variant: the caller owns the noise stream, so successive rows
/// of one training run draw distinct noise.
pub fn selection_probabilities_with(
    energies: &[f64],
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    if sigma == 0.0 {
        return energies.iter().map(|&e| clamp_p(logistic(e))).collect();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite and nonnegative");
    energies
        .iter()
        .map(|&e| clamp_p(logistic(e + normal.sample(rng))))
        .collect()
}

pub fn clamp_p(p: f64) -> f64 {
    p.clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// Softmax attention over the full memory: max-shifted softmax of the
/// energies plus the weighted-average context.
pub fn soft_attention(energies: &[f64], memory: &Memory) -> (AttentionRow, Vec<f64>) {
    assert_eq!(energies.len(), memory.len(), "energies must cover the memory");
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = energies.iter().map(|&e| (e - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    let row = AttentionRow::new(probs, Role::Soft);
    let ctx = row.expected_context(memory);
    (row, ctx)
}

/// Expected monotonic attention for one output step, by the parallel-scan
/// closed form. `p_row` entries must already be clamped into (0, 1);
/// `prev_alpha` is the previous step's row (one-hot on 0 for the first step).
pub fn monotonic_alpha_row(p_row: &[f64], prev_alpha: &AttentionRow) -> AttentionRow {
    assert_eq!(p_row.len(), prev_alpha.len(), "p row must match previous alpha");
    debug_assert!(p_row.iter().all(|&p| p > 0.0 && p < 1.0), "p must be clamped into (0,1)");

    let survive: Vec<f64> = p_row.iter().map(|p| 1.0 - p).collect();
    let cumprod = cumprod_exclusive(&survive);
    let ratios: Vec<f64> = prev_alpha
        .probs()
        .iter()
        .zip(&cumprod)
        .map(|(a, c)| a / c.max(SURVIVAL_FLOOR))
        .collect();
    let summed = cumsum_inclusive(&ratios);
    let probs: Vec<f64> = p_row
        .iter()
        .zip(&cumprod)
        .zip(&summed)
        .map(|((p, c), s)| p * c * s)
        .collect();
    AttentionRow::new(probs, Role::Monotonic)
}

/// One online hard-monotonic decode step. Scans the memory left to right
/// from `t_prev`, requesting selection probabilities lazily, and stops at
/// the first index with p >= 0.5. Returns the stop index and the context
/// (the attended entry), or `None` and a zero context if the scan falls off
/// the end of the memory.
pub fn monotonic_decode_step(
    memory: &Memory,
    mut p_supplier: impl FnMut(usize) -> f64,
    t_prev: usize,
) -> (Option<usize>, Vec<f64>) {
    assert!(t_prev < memory.len(), "cursor {t_prev} out of range {}", memory.len());
    for j in t_prev..memory.len() {
        if p_supplier(j) >= 0.5 {
            return (Some(j), memory.entry(j).to_vec());
        }
    }
    (None, vec![0.0; memory.dim()])
}

/// Stochastic variant of [`monotonic_decode_step`]: the attend/don't-attend
/// decision at each entry is sampled from Bernoulli(p) instead of
/// thresholded. Off the standard decode path — thresholding is what
/// saturated models want — but useful for probing an unsaturated model's
/// stopping distribution.
pub fn monotonic_decode_step_stochastic(
    memory: &Memory,
    mut p_supplier: impl FnMut(usize) -> f64,
    t_prev: usize,
    rng: &mut ChaCha8Rng,
) -> (Option<usize>, Vec<f64>) {
    use rand::Rng;
    assert!(t_prev < memory.len(), "cursor {t_prev} out of range {}", memory.len());
    for j in t_prev..memory.len() {
        if rng.gen_bool(p_supplier(j).clamp(0.0, 1.0)) {
            return (Some(j), memory.entry(j).to_vec());
        }
    }
    (None, vec![0.0; memory.dim()])
}
