//! Hard monotonic attention, both faces of it:
//!
//! - the training-time expected distribution, computed in closed form from
//!   cumulative sums and products;
//! - the test-time online process, which scans left to right from the
//!   previous stop and never looks past the entry it selects.
//!
//! Run with: cargo run --release --example monotonic_attention

use mocha::attention::clamp_p;
use mocha::{monotonic_alpha_row, monotonic_decode_step, AttentionRow, Memory, Tensor};

fn main() -> mocha::Result<()> {
    let t = 8;

    // Selection probabilities for one output step: mildly eager around
    // index 3. The expected row spreads stopping mass across the memory.
    let p: Vec<f64> = (0..t)
        .map(|j| if j == 3 { 0.7 } else { 0.15 })
        .collect();
    let prev = AttentionRow::one_hot(0, t);
    let alpha = monotonic_alpha_row(&p, &prev);
    println!("p:     {p:.3?}");
    println!("alpha: {:.3?}", alpha.probs());
    println!("stopping mass = {:.4} (deficit = never stopping)", alpha.mass());

    // Chain a second step: the support can only move right.
    let alpha2 = monotonic_alpha_row(&p, &alpha);
    println!("alpha at the next output step: {:.3?}", alpha2.probs());

    // The online decoder with binary decisions: stop at the first p >= 0.5.
    let memory = Memory::new(Tensor::from_vec(
        (0..t).flat_map(|j| vec![j as f64, 1.0]).collect(),
        t,
        2,
    ))?;
    let binary_p = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
    let (stop, context) = monotonic_decode_step(&memory, |j| binary_p[j], 0);
    println!("first decode step: stop = {stop:?}, context = {context:?}");
    let (stop2, context2) = monotonic_decode_step(&memory, |j| binary_p[j], stop.unwrap());
    println!("second decode step (cursor carried forward): stop = {stop2:?}, context = {context2:?}");

    // With binary probabilities the expected row marginalizes to exactly the
    // hard choice, so training and decoding agree.
    let clamped: Vec<f64> = binary_p.iter().map(|&x| clamp_p(x)).collect();
    let marginal = monotonic_alpha_row(&clamped, &AttentionRow::one_hot(0, t));
    println!("expected row under binary p: {:.3?}", marginal.probs());
    Ok(())
}
