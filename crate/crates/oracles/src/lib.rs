//! Naive, obviously-correct reference implementations used as ground truth
//! when testing the efficient attention kernels, plus a central-difference
//! gradient oracle.
//!
//! Everything here is written for clarity over speed: sequential recursions
//! and direct nested sums, O(T^2)..O(T^3). None of these functions may be
//! called from a production code path; this crate is a dev-dependency only.
//!
//! Index-based loops are deliberate throughout: each body is a direct
//! transcription of the defining sum it implements.
#![allow(clippy::needless_range_loop)]

use std::fmt;

/// Largest memory length accepted by [`matcha_beta_bruteforce`].
pub const MATCHA_BRUTEFORCE_MAX_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// The O(T^3) MAtChA brute force refuses large inputs.
    SequenceTooLong { len: usize, max: usize },
    /// Input slices disagree on the memory length T.
    LengthMismatch { left: usize, right: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::SequenceTooLong { len, max } => {
                write!(f, "sequence length {len} exceeds brute-force limit {max}")
            }
            OracleError::LengthMismatch { left, right } => {
                write!(f, "input lengths disagree: {left} vs {right}")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// Expected monotonic attention for one output step, evaluated with the
/// sequential first-order recursion
///
/// ```text
/// q[0] = prev_alpha[0]
/// q[j] = (1 - p[j-1]) * q[j-1] + prev_alpha[j]
/// alpha[j] = p[j] * q[j]
/// ```
///
/// The substitution q = alpha / p removes the division that the parallel
/// closed form needs, so this oracle stays exact as p approaches 1.
pub fn monotonic_alpha_recursive(p_row: &[f64], prev_alpha: &[f64]) -> Vec<f64> {
    assert_eq!(
        p_row.len(),
        prev_alpha.len(),
        "p_row and prev_alpha must have equal length"
    );
    let mut alpha = Vec::with_capacity(p_row.len());
    let mut q = 0.0;
    for j in 0..p_row.len() {
        let survive = if j == 0 { 0.0 } else { (1.0 - p_row[j - 1]) * q };
        q = survive + prev_alpha[j];
        alpha.push(p_row[j] * q);
    }
    alpha
}

/// Chunkwise attention for a fixed window `w`, evaluated with the direct
/// nested sum
///
/// ```text
/// beta[j] = sum_{k=j}^{j+w-1} alpha[k] * exp(u[j]) / sum_{l=k-w+1}^{k} exp(u[l])
/// ```
///
/// Window indices that fall outside `[0, T)` are skipped, in both the outer
/// sum (alpha treated as zero-padded) and the softmax denominator. That
/// matches a chunk that is clipped at the left memory edge.
pub fn mocha_beta_bruteforce(alpha_row: &[f64], u: &[f64], w: usize) -> Vec<f64> {
    assert_eq!(alpha_row.len(), u.len(), "alpha and u must have equal length");
    assert!(w >= 1, "chunk width must be at least 1");
    let t = alpha_row.len();
    let mut beta = vec![0.0; t];
    for j in 0..t {
        let mut total = 0.0;
        for k in j..(j + w).min(t) {
            let lo = (k + 1).saturating_sub(w);
            let denom: f64 = (lo..=k).map(|l| u[l].exp()).sum();
            total += alpha_row[k] * u[j].exp() / denom;
        }
        beta[j] = total;
    }
    beta
}

/// Adaptive-chunk attention evaluated with the direct triple sum over every
/// (previous stop k, current stop l) pair:
///
/// ```text
/// beta[j] = sum_{k<=j} sum_{l>=j} exp(u[j]) / sum_{m=k}^{l} exp(u[m])
///           * prev_alpha[k] * p[l] * prod_{n=k}^{l-1} (1 - p[n])
/// ```
///
/// O(T^3); inputs longer than [`MATCHA_BRUTEFORCE_MAX_LEN`] are rejected.
pub fn matcha_beta_bruteforce(
    prev_alpha: &[f64],
    p_row: &[f64],
    u: &[f64],
) -> Result<Vec<f64>, OracleError> {
    let t = prev_alpha.len();
    if p_row.len() != t {
        return Err(OracleError::LengthMismatch { left: t, right: p_row.len() });
    }
    if u.len() != t {
        return Err(OracleError::LengthMismatch { left: t, right: u.len() });
    }
    if t > MATCHA_BRUTEFORCE_MAX_LEN {
        return Err(OracleError::SequenceTooLong { len: t, max: MATCHA_BRUTEFORCE_MAX_LEN });
    }

    let mut beta = vec![0.0; t];
    for j in 0..t {
        let mut total = 0.0;
        for k in 0..=j {
            for l in j..t {
                let denom: f64 = (k..=l).map(|m| u[m].exp()).sum();
                let survive: f64 = (k..l).map(|n| 1.0 - p_row[n]).product();
                total += u[j].exp() / denom * prev_alpha[k] * p_row[l] * survive;
            }
        }
        beta[j] = total;
    }
    Ok(beta)
}

/// Central-difference gradient of a scalar function: per coordinate,
/// `(f(x + h e_j) - f(x - h e_j)) / 2h`. `f` must be deterministic.
pub fn finite_difference_gradient<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(h > 0.0, "step size must be positive");
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let up = f(&probe);
        probe[j] = x[j] - h;
        let down = f(&probe);
        probe[j] = x[j];
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (i, (a, e)) in actual.iter().zip(expected).enumerate() {
            assert!(
                (a - e).abs() <= tol,
                "index {i}: got {a}, expected {e} (tol {tol})"
            );
        }
    }

    #[test]
    fn recursive_alpha_passes_through_when_p_is_one() {
        for k in 0..5 {
            let p = vec![1.0; 5];
            let mut prev = vec![0.0; 5];
            prev[k] = 1.0;
            let alpha = monotonic_alpha_recursive(&p, &prev);
            assert_close(&alpha, &prev, 1e-15);
        }
    }

    #[test]
    fn recursive_alpha_hand_case() {
        // q0 = 1, a0 = 0.5; q1 = 0.5*1 + 0 = 0.5, a1 = 0.25
        let alpha = monotonic_alpha_recursive(&[0.5, 0.5], &[1.0, 0.0]);
        assert_close(&alpha, &[0.5, 0.25], 1e-15);
    }

    #[test]
    fn recursive_alpha_all_zero_p_gives_zero_mass() {
        let alpha = monotonic_alpha_recursive(&[0.0; 4], &[0.25; 4]);
        assert_close(&alpha, &[0.0; 4], 0.0);
    }

    #[test]
    fn mocha_bruteforce_width_one_is_identity() {
        let alpha = [0.1, 0.2, 0.3, 0.15];
        let u = [0.4, -1.0, 2.0, 0.0];
        let beta = mocha_beta_bruteforce(&alpha, &u, 1);
        assert_close(&beta, &alpha, 0.0);
    }

    #[test]
    fn mocha_bruteforce_one_hot_uniform_energies_splits_evenly() {
        let mut alpha = vec![0.0; 8];
        alpha[4] = 1.0;
        let u = vec![0.7; 8];
        let beta = mocha_beta_bruteforce(&alpha, &u, 2);
        let mut expected = vec![0.0; 8];
        expected[3] = 0.5;
        expected[4] = 0.5;
        assert_close(&beta, &expected, 1e-15);
    }

    #[test]
    fn mocha_bruteforce_full_width_preserves_mass() {
        // With w = T the betas form a mixture of left-truncated softmaxes;
        // whatever the mixture looks like, its mass must equal the alpha mass.
        let alpha = [0.3, 0.25, 0.25, 0.2];
        let u = [1.0, -0.5, 0.25, 2.0];
        let beta = mocha_beta_bruteforce(&alpha, &u, 4);
        let mass: f64 = beta.iter().sum();
        let alpha_mass: f64 = alpha.iter().sum();
        assert!((mass - alpha_mass).abs() < 1e-12, "mass {mass} vs {alpha_mass}");
    }

    #[test]
    fn matcha_bruteforce_single_entry() {
        let beta = matcha_beta_bruteforce(&[1.0], &[0.37], &[1.3]).unwrap();
        assert_close(&beta, &[0.37], 1e-15);
    }

    #[test]
    fn matcha_bruteforce_binary_p_is_chunk_softmax() {
        // Previous stop at index 1, guaranteed stop at index 3: the chunk is
        // [1, 3] and beta must be the softmax of u over it.
        let t = 6;
        let mut prev = vec![0.0; t];
        prev[1] = 1.0;
        let mut p = vec![0.0; t];
        p[3] = 1.0;
        let u = [0.3, -0.2, 1.4, 0.9, 2.0, -1.0];
        let beta = matcha_beta_bruteforce(&prev, &p, &u).unwrap();

        let denom: f64 = (1..=3).map(|m| u[m].exp()).sum();
        let mut expected = vec![0.0; t];
        for j in 1..=3 {
            expected[j] = u[j].exp() / denom;
        }
        assert_close(&beta, &expected, 1e-14);
    }

    #[test]
    fn matcha_bruteforce_rejects_long_inputs() {
        let n = MATCHA_BRUTEFORCE_MAX_LEN + 1;
        let err = matcha_beta_bruteforce(&vec![0.0; n], &vec![0.5; n], &vec![0.0; n]);
        assert!(matches!(err, Err(OracleError::SequenceTooLong { .. })));
    }

    #[test]
    fn fd_gradient_of_sum_is_ones() {
        let grad = finite_difference_gradient(|x| x.iter().sum(), &[0.3, -1.0, 4.0], 1e-5);
        assert_close(&grad, &[1.0, 1.0, 1.0], 1e-9);
    }

    #[test]
    fn fd_gradient_of_square_norm() {
        let grad =
            finite_difference_gradient(|x| x.iter().map(|v| v * v).sum(), &[1.0, 2.0], 1e-5);
        assert_close(&grad, &[2.0, 4.0], 1e-6);
    }
}
