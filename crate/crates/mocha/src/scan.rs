//! Prefix and windowed scan primitives. Every training-time attention
//! distribution is assembled from these.
//!
//! Conventions, fixed here so the attention kernels cannot disagree:
//! - `cumsum_inclusive([x0, x1, ...]) = [x0, x0+x1, ...]`
//! - `cumprod_exclusive([x0, x1, ...]) = [1, x0, x0*x1, ...]` — the last
//!   input element never enters any output.
//! - `movingsum(x, b, f)[n]` sums the window `[n-b+1, n+f-1]`, zero-padded
//!   at both sequence edges.

/// Threshold below which `all_partial_products` abandons the
/// cumulative-product-and-divide route. A factor this small (or an exact
/// zero, which occurs whenever a selection probability saturates at 1)
/// would poison every later quotient, so the matrix is rebuilt with
/// per-row running products instead.
pub const PARTIAL_PRODUCT_GUARD: f64 = 1e-30;

pub fn cumsum_inclusive(x: &[f64]) -> Vec<f64> {
    debug_assert!(x.iter().all(|v| v.is_finite()));
    let mut acc = 0.0;
    x.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

pub fn cumprod_exclusive(x: &[f64]) -> Vec<f64> {
    debug_assert!(x.iter().all(|v| v.is_finite()));
    let mut acc = 1.0;
    x.iter()
        .map(|v| {
            let out = acc;
            acc *= v;
            out
        })
        .collect()
}

/// Windowed sum with zero padding:
/// `out[n] = sum_{m = n-(b-1)}^{n+f-1} x[m]`, out-of-range m contributing 0.
/// `b` counts positions looking back (including n), `f` looking forward
/// (including n), so `movingsum(x, 1, 1)` is the identity.
pub fn movingsum(x: &[f64], b: usize, f: usize) -> Vec<f64> {
    assert!(b >= 1, "movingsum: b must be >= 1");
    assert!(f >= 1, "movingsum: f must be >= 1");
    let t = x.len();
    // prefix[k] = sum of x[..k]
    let mut prefix = Vec::with_capacity(t + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v;
        prefix.push(acc);
    }
    (0..t)
        .map(|n| {
            let lo = n.saturating_sub(b - 1);
            let hi = (n + f - 1).min(t - 1);
            prefix[hi + 1] - prefix[lo]
        })
        .collect()
}

/// T x T matrix of all contiguous subsequence sums (or products).
///
/// `entry(j, l)` for j <= l holds the fold of `x[j..=l]`; entries with
/// j > l hold 1, so the matrix can sit in a denominator without special
/// casing. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumMatrix {
    entries: Vec<f64>,
    t: usize,
}

impl PartialSumMatrix {
    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    pub fn entry(&self, j: usize, l: usize) -> f64 {
        self.entries[j * self.t + l]
    }
}

/// All subsequence sums via inclusive-minus-exclusive cumulative sums,
/// O(T^2) to materialize rather than O(T^3) looping.
pub fn all_partial_sums(x: &[f64]) -> PartialSumMatrix {
    let t = x.len();
    let cumsum = cumsum_inclusive(x);
    let mut entries = vec![1.0; t * t];
    for j in 0..t {
        let before = if j == 0 { 0.0 } else { cumsum[j - 1] };
        for l in j..t {
            entries[j * t + l] = cumsum[l] - before;
        }
    }
    PartialSumMatrix { entries, t }
}

/// All subsequence products via cumulative products and division, falling
/// back to per-row running products when any factor is small enough to
/// make the quotients meaningless (see [`PARTIAL_PRODUCT_GUARD`]).
pub fn all_partial_products(x: &[f64]) -> PartialSumMatrix {
    let t = x.len();
    let mut entries = vec![1.0; t * t];
    if x.iter().any(|v| v.abs() < PARTIAL_PRODUCT_GUARD) {
        for j in 0..t {
            let mut acc = 1.0;
            for l in j..t {
                acc *= x[l];
                entries[j * t + l] = acc;
            }
        }
    } else {
        // inclusive cumulative product, with a leading 1
        let mut prefix = Vec::with_capacity(t + 1);
        prefix.push(1.0);
        let mut acc = 1.0;
        for v in x {
            acc *= v;
            prefix.push(acc);
        }
        for j in 0..t {
            for l in j..t {
                entries[j * t + l] = prefix[l + 1] / prefix[j];
            }
        }
    }
    PartialSumMatrix { entries, t }
}
