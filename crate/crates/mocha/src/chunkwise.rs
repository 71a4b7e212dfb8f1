//! Chunkwise attention: soft attention over a small window whose endpoint is
//! chosen by a hard monotonic mechanism.
//!
//! MoChA uses a fixed window of `w` entries ending at the stop position.
//! MAtChA instead spans the window adaptively from the previous stop to the
//! current one. Both keep decoding online and linear-time; both have
//! training-time expected distributions built from scan primitives.

use crate::attention::{AttentionRow, Role, SURVIVAL_FLOOR};
use crate::energy::Memory;
use crate::scan::{all_partial_products, all_partial_sums, cumprod_exclusive, movingsum};

/// Fixed chunk width for MoChA. Width 1 degenerates to hard monotonic
/// attention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkConfig {
    pub width: usize,
}

impl ChunkConfig {
    pub fn new(width: usize) -> Self {
        assert!(width >= 1, "chunk width must be at least 1");
        ChunkConfig { width }
    }
}

/// Memory lengths up to this bound use the dense partial-sum matrices when
/// computing the adaptive-chunk distribution; longer rows switch to a
/// column-streaming evaluation that keeps only O(T) extra state.
pub const MATCHA_DENSE_MAX_LEN: usize = 64;

/// Expected MoChA attention for one output step:
///
/// ```text
/// beta = exp(u') * movingsum(alpha / movingsum(exp(u'), w, 1), 1, w)
/// ```
///
/// with u' = u - max(u), an exact rewrite because the chunk softmax is
/// shift-invariant. Width 1 returns alpha unchanged so the degenerate case
/// is exact rather than merely close.
pub fn mocha_beta_row(alpha: &AttentionRow, u: &[f64], cfg: ChunkConfig) -> AttentionRow {
    assert_eq!(alpha.len(), u.len(), "alpha row and chunk energies must agree");
    if cfg.width == 1 {
        return AttentionRow::new(alpha.probs().to_vec(), Role::Chunkwise);
    }
    let shift = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp_u: Vec<f64> = u.iter().map(|&x| (x - shift).exp()).collect();
    let denom = movingsum(&exp_u, cfg.width, 1);
    let ratio: Vec<f64> = alpha
        .probs()
        .iter()
        .zip(&denom)
        .map(|(a, d)| a / d)
        .collect();
    let spread = movingsum(&ratio, 1, cfg.width);
    let probs: Vec<f64> = exp_u.iter().zip(&spread).map(|(e, s)| e * s).collect();
    AttentionRow::new(probs, Role::Chunkwise)
}

/// One online MoChA decode step. The monotonic scan picks the stop position;
/// soft attention over the window `[stop - w + 1, stop]` (clipped at the
/// left memory edge) produces the context. Suppliers are called lazily, so
/// nothing past the stop position is ever evaluated.
pub fn mocha_decode_step(
    memory: &Memory,
    mut p_supplier: impl FnMut(usize) -> f64,
    u_supplier: impl FnMut(usize) -> f64,
    t_prev: usize,
    cfg: ChunkConfig,
) -> (Option<usize>, Vec<f64>) {
    assert!(t_prev < memory.len(), "cursor {t_prev} out of range {}", memory.len());
    for j in t_prev..memory.len() {
        if p_supplier(j) >= 0.5 {
            let lo = (j + 1).saturating_sub(cfg.width);
            return (Some(j), chunk_context(memory, u_supplier, lo, j));
        }
    }
    (None, vec![0.0; memory.dim()])
}

/// Expected MAtChA attention for one output step. Marginalizes over every
/// (previous stop k, current stop l) pair; entry j receives the chunk
/// softmax weight of j within [k, l], weighted by the probability of that
/// pair. Evaluated per stop column l with the scan closed form
///
/// ```text
/// r[:, l] = cumprod_exclusive(1-p)
///           * cumsum(prev_alpha / (partial_sums(exp u')[:, l] * cumprod_exclusive(1-p)))
/// beta[j] = exp(u'[j]) * sum_{l >= j} p[l] * prod_{o=j}^{l-1}(1-p[o]) * r[j, l]
/// ```
pub fn matcha_beta_row(prev_alpha: &AttentionRow, p_row: &[f64], u: &[f64]) -> AttentionRow {
    let t = prev_alpha.len();
    assert_eq!(p_row.len(), t, "p row must match previous alpha");
    assert_eq!(u.len(), t, "chunk energies must match previous alpha");
    debug_assert!(p_row.iter().all(|&p| p > 0.0 && p < 1.0), "p must be clamped into (0,1)");
    let probs = if t <= MATCHA_DENSE_MAX_LEN {
        matcha_beta_dense(prev_alpha.probs(), p_row, u)
    } else {
        matcha_beta_streaming(prev_alpha.probs(), p_row, u)
    };
    AttentionRow::new(probs, Role::Chunkwise)
}

/// Dense route: materializes the T x T partial-sum and partial-product
/// matrices once and reads columns out of them.
#[allow(clippy::needless_range_loop)]
pub(crate) fn matcha_beta_dense(prev: &[f64], p: &[f64], u: &[f64]) -> Vec<f64> {
    let t = prev.len();
    let shift = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp_u: Vec<f64> = u.iter().map(|&x| (x - shift).exp()).collect();
    let survive: Vec<f64> = p.iter().map(|x| 1.0 - x).collect();
    let sums = all_partial_sums(&exp_u);
    let products = all_partial_products(&survive);
    let cumprod = cumprod_exclusive(&survive);

    let mut beta = vec![0.0; t];
    for l in 0..t {
        let mut acc = 0.0;
        for j in 0..=l {
            acc += prev[j] / (sums.entry(j, l) * cumprod[j].max(SURVIVAL_FLOOR));
            let r_jl = cumprod[j] * acc;
            let tail = if l == j { 1.0 } else { products.entry(j, l - 1) };
            beta[j] += p[l] * tail * r_jl;
        }
    }
    for (b, e) in beta.iter_mut().zip(&exp_u) {
        *b *= e;
    }
    beta
}

/// Streaming route: identical arithmetic, but partial sums come from prefix
/// differences and the survival products are maintained incrementally, so
/// peak extra memory stays O(T).
#[allow(clippy::needless_range_loop)]
pub(crate) fn matcha_beta_streaming(prev: &[f64], p: &[f64], u: &[f64]) -> Vec<f64> {
    let t = prev.len();
    let shift = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp_u: Vec<f64> = u.iter().map(|&x| (x - shift).exp()).collect();
    let survive: Vec<f64> = p.iter().map(|x| 1.0 - x).collect();
    let cumprod = cumprod_exclusive(&survive);
    let mut prefix = Vec::with_capacity(t + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for e in &exp_u {
        acc += e;
        prefix.push(acc);
    }

    let mut beta = vec![0.0; t];
    // tail[j] = prod_{o=j}^{l-1} survive[o] for the current l
    let mut tail = vec![0.0; t];
    for l in 0..t {
        if l > 0 {
            for item in tail.iter_mut().take(l) {
                *item *= survive[l - 1];
            }
        }
        tail[l] = 1.0;
        let mut acc = 0.0;
        for j in 0..=l {
            let denom = (prefix[l + 1] - prefix[j]) * cumprod[j].max(SURVIVAL_FLOOR);
            acc += prev[j] / denom;
            beta[j] += p[l] * tail[j] * (cumprod[j] * acc);
        }
    }
    for (b, e) in beta.iter_mut().zip(&exp_u) {
        *b *= e;
    }
    beta
}

/// One online MAtChA decode step: the chunk spans from the previous stop to
/// the current one, so a stop at the cursor itself puts all weight there.
pub fn matcha_decode_step(
    memory: &Memory,
    mut p_supplier: impl FnMut(usize) -> f64,
    u_supplier: impl FnMut(usize) -> f64,
    t_prev: usize,
) -> (Option<usize>, Vec<f64>) {
    assert!(t_prev < memory.len(), "cursor {t_prev} out of range {}", memory.len());
    for j in t_prev..memory.len() {
        if p_supplier(j) >= 0.5 {
            return (Some(j), chunk_context(memory, u_supplier, t_prev, j));
        }
    }
    (None, vec![0.0; memory.dim()])
}

/// Softmax-weighted average of memory entries lo..=hi under lazily supplied
/// chunk energies.
fn chunk_context(
    memory: &Memory,
    mut u_supplier: impl FnMut(usize) -> f64,
    lo: usize,
    hi: usize,
) -> Vec<f64> {
    let mut energies: Vec<f64> = (lo..=hi).map(&mut u_supplier).collect();
    let shift = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for e in energies.iter_mut() {
        *e = (*e - shift).exp();
        total += *e;
    }
    let mut ctx = vec![0.0; memory.dim()];
    for (k, j) in (lo..=hi).enumerate() {
        let w = energies[k] / total;
        for (c, h) in ctx.iter_mut().zip(memory.entry(j)) {
            *c += w * h;
        }
    }
    ctx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attention::{clamp_p, monotonic_alpha_row};
    use crate::tensor::Tensor;
    use mocha_oracles::{matcha_beta_bruteforce, mocha_beta_bruteforce};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_monotonic_row(rng: &mut ChaCha8Rng, t: usize) -> AttentionRow {
        let mut a: Vec<f64> = (0..t).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = a.iter().sum();
        let scale = rng.gen_range(0.3..1.0);
        for x in a.iter_mut() {
            *x = *x / total * scale;
        }
        AttentionRow::new(a, Role::Monotonic)
    }

    fn basis_memory(t: usize) -> Memory {
        let mut data = vec![0.0; t * t];
        for j in 0..t {
            data[j * t + j] = 1.0;
        }
        Memory::new(Tensor::from_vec(data, t, t)).unwrap()
    }

    #[test]
    fn width_one_returns_alpha_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let alpha = random_monotonic_row(&mut rng, 17);
        let u: Vec<f64> = (0..17).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(1));
        assert_eq!(beta.probs(), alpha.probs());
    }

    #[test]
    fn one_hot_alpha_uniform_energies_split_over_chunk() {
        let t = 8;
        let alpha = AttentionRow::one_hot(4, t);
        let u = vec![1.3; t];
        let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(2));
        for (j, &b) in beta.probs().iter().enumerate() {
            let expected = if j == 3 || j == 4 { 0.5 } else { 0.0 };
            assert!((b - expected).abs() < 1e-12, "j={j}: {b}");
        }
    }

    #[test]
    fn mocha_matches_bruteforce_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &w in &[2usize, 3, 4, 6, 8] {
            for _ in 0..40 {
                let t = rng.gen_range(1..=30);
                let alpha = random_monotonic_row(&mut rng, t);
                let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
                let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(w));
                let expected = mocha_beta_bruteforce(alpha.probs(), &u, w);
                for (j, (b, e)) in beta.probs().iter().zip(&expected).enumerate() {
                    assert!((b - e).abs() <= 1e-8, "w={w} t={t} j={j}: {b} vs {e}");
                }
            }
        }
    }

    #[test]
    fn matcha_single_entry_is_p() {
        let prev = AttentionRow::one_hot(0, 1);
        let beta = matcha_beta_row(&prev, &[0.37], &[2.5]);
        assert!((beta.probs()[0] - 0.37).abs() < 1e-15);
    }

    #[test]
    fn matcha_matches_bruteforce_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let t = rng.gen_range(1..=8);
            let prev = random_monotonic_row(&mut rng, t);
            let p: Vec<f64> = (0..t).map(|_| rng.gen_range(0.01..0.99)).collect();
            let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let beta = matcha_beta_row(&prev, &p, &u);
            let expected = matcha_beta_bruteforce(prev.probs(), &p, &u).unwrap();
            for (j, (b, e)) in beta.probs().iter().zip(&expected).enumerate() {
                assert!((b - e).abs() <= 1e-6, "t={t} j={j}: {b} vs {e}");
            }
        }
    }

    #[test]
    fn matcha_binary_p_supported_on_chunk_softmax() {
        // Previous stop at index 1, guaranteed stop at index 3: support is
        // exactly {1, 2, 3} with softmax(u[1..=3]) weights.
        let t = 6;
        let prev = AttentionRow::one_hot(1, t);
        let p: Vec<f64> = (0..t).map(|j| clamp_p(if j == 3 { 1.0 } else { 0.0 })).collect();
        let u = [0.2, 1.1, -0.4, 0.9, 3.0, -2.0];
        let beta = matcha_beta_row(&prev, &p, &u);
        let denom: f64 = (1..=3).map(|m| u[m].exp()).sum();
        for (j, &b) in beta.probs().iter().enumerate() {
            let expected = if (1..=3).contains(&j) { u[j].exp() / denom } else { 0.0 };
            assert!((b - expected).abs() < 1e-9, "j={j}: {b} vs {expected}");
        }
    }

    #[test]
    fn matcha_dense_and_streaming_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let t = rng.gen_range(1..=120);
            let prev = random_monotonic_row(&mut rng, t);
            let p: Vec<f64> = (0..t).map(|_| rng.gen_range(0.01..0.99)).collect();
            let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let dense = matcha_beta_dense(prev.probs(), &p, &u);
            let streaming = matcha_beta_streaming(prev.probs(), &p, &u);
            for (j, (a, b)) in dense.iter().zip(&streaming).enumerate() {
                assert!((a - b).abs() <= 1e-11, "t={t} j={j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn mocha_decode_clips_chunk_at_left_edge() {
        let memory = basis_memory(5);
        let (stop, ctx) =
            mocha_decode_step(&memory, |_| 0.9, |_| 0.0, 0, ChunkConfig::new(3));
        assert_eq!(stop, Some(0));
        assert_eq!(ctx, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mocha_decode_width_one_is_hard_attention() {
        let memory = basis_memory(5);
        let p = [0.0, 0.0, 0.8, 0.0, 0.0];
        let (stop, ctx) =
            mocha_decode_step(&memory, |j| p[j], |_| 1.7, 0, ChunkConfig::new(1));
        assert_eq!(stop, Some(2));
        assert_eq!(ctx[2], 1.0);
        assert_eq!(ctx.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn mocha_decode_returns_zero_context_without_stop() {
        let memory = basis_memory(4);
        let (stop, ctx) =
            mocha_decode_step(&memory, |_| 0.1, |_| 0.0, 1, ChunkConfig::new(2));
        assert_eq!(stop, None);
        assert!(ctx.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn mocha_decode_matches_expected_context_for_binary_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let t = rng.gen_range(2..=20);
            let w = rng.gen_range(1..=6);
            let t_prev = rng.gen_range(0..t);
            let stop_at = rng.gen_range(t_prev..t);
            let dim = 3;
            let data: Vec<f64> = (0..t * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let memory = Memory::new(Tensor::from_vec(data, t, dim)).unwrap();
            let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p_binary: Vec<f64> =
                (0..t).map(|j| if j == stop_at { 1.0 } else { 0.0 }).collect();

            let (stop, decode_ctx) = mocha_decode_step(
                &memory,
                |j| p_binary[j],
                |j| u[j],
                t_prev,
                ChunkConfig::new(w),
            );
            assert_eq!(stop, Some(stop_at));

            let p_clamped: Vec<f64> = p_binary.iter().map(|&x| clamp_p(x)).collect();
            let alpha = monotonic_alpha_row(&p_clamped, &AttentionRow::one_hot(t_prev, t));
            let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(w));
            let expected_ctx = beta.expected_context(&memory);
            for (a, b) in decode_ctx.iter().zip(&expected_ctx) {
                assert!((a - b).abs() <= 1e-10, "t={t} w={w}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn matcha_decode_stop_at_cursor_takes_the_whole_weight() {
        let memory = basis_memory(6);
        let (stop, ctx) = matcha_decode_step(&memory, |_| 0.9, |_| -1.0, 3);
        assert_eq!(stop, Some(3));
        assert_eq!(ctx[3], 1.0);
    }

    #[test]
    fn matcha_decode_full_span_uniform_energies_averages_memory() {
        let t = 5;
        let memory = basis_memory(t);
        let p: Vec<f64> = (0..t).map(|j| if j == t - 1 { 1.0 } else { 0.0 }).collect();
        let (stop, ctx) = matcha_decode_step(&memory, |j| p[j], |_| 0.7, 0);
        assert_eq!(stop, Some(t - 1));
        for &c in &ctx {
            assert!((c - 1.0 / t as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn matcha_decode_matches_expected_context_for_binary_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..50 {
            let t = rng.gen_range(2..=20);
            let t_prev = rng.gen_range(0..t);
            let stop_at = rng.gen_range(t_prev..t);
            let dim = 3;
            let data: Vec<f64> = (0..t * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let memory = Memory::new(Tensor::from_vec(data, t, dim)).unwrap();
            let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let p_binary: Vec<f64> =
                (0..t).map(|j| if j == stop_at { 1.0 } else { 0.0 }).collect();

            let (stop, decode_ctx) =
                matcha_decode_step(&memory, |j| p_binary[j], |j| u[j], t_prev);
            assert_eq!(stop, Some(stop_at));

            let p_clamped: Vec<f64> = p_binary.iter().map(|&x| clamp_p(x)).collect();
            let beta = matcha_beta_row(&AttentionRow::one_hot(t_prev, t), &p_clamped, &u);
            let expected_ctx = beta.expected_context(&memory);
            for (a, b) in decode_ctx.iter().zip(&expected_ctx) {
                assert!((a - b).abs() <= 1e-10, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn decode_reorders_within_chunk_by_permuting_energies() {
        // Context weights inside the chunk follow u, not memory order:
        // swapping two chunk energies swaps the corresponding weights.
        let t = 6;
        let memory = basis_memory(t);
        let stop = 4;
        let w = 3; // chunk {2, 3, 4}
        let p: Vec<f64> = (0..t).map(|j| if j == stop { 0.9 } else { 0.1 }).collect();
        let u = [0.0, 0.0, 1.5, -0.5, 0.8, 0.0];
        let mut u_swapped = u;
        u_swapped.swap(2, 4);

        let (_, ctx) =
            mocha_decode_step(&memory, |j| p[j], |j| u[j], 0, ChunkConfig::new(w));
        let (_, ctx_swapped) =
            mocha_decode_step(&memory, |j| p[j], |j| u_swapped[j], 0, ChunkConfig::new(w));
        assert!((ctx[2] - ctx_swapped[4]).abs() < 1e-15);
        assert!((ctx[4] - ctx_swapped[2]).abs() < 1e-15);
        assert!((ctx[3] - ctx_swapped[3]).abs() < 1e-15);
    }

    #[test]
    fn online_contract_no_index_past_stop_is_touched() {
        let t = 32;
        let memory = basis_memory(t);
        let stop_at = 11;
        for mechanism in 0..2 {
            let mut max_p = 0usize;
            let mut max_u = 0usize;
            let p = |j: usize| if j == stop_at { 0.9 } else { 0.2 };
            let (stop, _) = if mechanism == 0 {
                mocha_decode_step(
                    &memory,
                    |j| {
                        max_p = max_p.max(j);
                        p(j)
                    },
                    |j| {
                        max_u = max_u.max(j);
                        0.3
                    },
                    2,
                    ChunkConfig::new(4),
                )
            } else {
                matcha_decode_step(
                    &memory,
                    |j| {
                        max_p = max_p.max(j);
                        p(j)
                    },
                    |j| {
                        max_u = max_u.max(j);
                        0.3
                    },
                    2,
                )
            };
            assert_eq!(stop, Some(stop_at));
            assert!(max_p <= stop_at, "mechanism {mechanism} probed past the stop");
            assert!(max_u <= stop_at, "mechanism {mechanism} read chunk energy past the stop");
        }
    }

    #[test]
    fn mocha_decode_energy_budget_is_linear_in_advance_plus_width() {
        let t = 64;
        let memory = basis_memory(t);
        for (t_prev, stop_at, w) in [(0usize, 5usize, 3usize), (10, 30, 8), (3, 3, 4)] {
            let mut p_calls = 0usize;
            let mut u_calls = 0usize;
            let (stop, _) = mocha_decode_step(
                &memory,
                |j| {
                    p_calls += 1;
                    if j == stop_at {
                        0.9
                    } else {
                        0.1
                    }
                },
                |_| {
                    u_calls += 1;
                    0.0
                },
                t_prev,
                ChunkConfig::new(w),
            );
            assert_eq!(stop, Some(stop_at));
            assert!(
                p_calls + u_calls <= (stop_at - t_prev + 1) + w,
                "energy evaluations {} exceed budget",
                p_calls + u_calls
            );
        }
    }

    #[test]
    fn shift_invariance_is_bitwise_for_exactly_representable_shifts() {
        // Dyadic energies and shifts add without rounding, so the max-shifted
        // pipeline sees bit-identical inputs and must emit bit-identical rows.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let t = 12;
        let prev = random_monotonic_row(&mut rng, t);
        let p: Vec<f64> = (0..t).map(|_| rng.gen_range(0.05..0.95)).collect();
        let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-256i32..256) as f64 / 64.0).collect();
        let alpha = monotonic_alpha_row(&p, &prev);
        for c in [-8.0, 0.25, 2.0, 16.5] {
            let shifted: Vec<f64> = u.iter().map(|x| x + c).collect();
            for w in [2usize, 4] {
                let a = mocha_beta_row(&alpha, &u, ChunkConfig::new(w));
                let b = mocha_beta_row(&alpha, &shifted, ChunkConfig::new(w));
                assert_eq!(a.probs(), b.probs(), "mocha shift {c} w {w}");
            }
            let a = matcha_beta_row(&prev, &p, &u);
            let b = matcha_beta_row(&prev, &p, &shifted);
            assert_eq!(a.probs(), b.probs(), "matcha shift {c}");
        }
    }

    proptest! {
        #[test]
        fn mass_is_conserved_by_both_mechanisms(seed in 0u64..3000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = rng.gen_range(1..=40);
            let prev = random_monotonic_row(&mut rng, t);
            let p: Vec<f64> = (0..t).map(|_| rng.gen_range(0.01..0.99)).collect();
            let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let w = rng.gen_range(1..=8);

            let alpha = monotonic_alpha_row(&p, &prev);
            let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(w));
            prop_assert!((beta.mass() - alpha.mass()).abs() <= 1e-8,
                "mocha mass {} vs alpha mass {}", beta.mass(), alpha.mass());

            let beta_adaptive = matcha_beta_row(&prev, &p, &u);
            prop_assert!((beta_adaptive.mass() - alpha.mass()).abs() <= 1e-8,
                "matcha mass {} vs alpha mass {}", beta_adaptive.mass(), alpha.mass());
        }
    }
}
