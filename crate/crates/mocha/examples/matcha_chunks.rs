//! MAtChA: the chunk spans adaptively from the previous stop position to
//! the current one, instead of having a fixed width. The expected
//! distribution marginalizes over every (previous stop, current stop) pair
//! with a per-column scan recursion.
//!
//! Run with: cargo run --release --example matcha_chunks

use mocha::attention::clamp_p;
use mocha::{matcha_beta_row, matcha_decode_step, AttentionRow, Memory, Tensor};

fn main() -> mocha::Result<()> {
    let t = 9;

    // Diffuse previous attention and selection probabilities: the expected
    // chunk distribution blends many candidate spans.
    let prev = AttentionRow::new(
        {
            let mut a = vec![0.0; t];
            a[1] = 0.6;
            a[2] = 0.4;
            a
        },
        mocha::Role::Monotonic,
    );
    let p: Vec<f64> = (0..t).map(|j| if j >= 4 { 0.55 } else { 0.08 }).collect();
    let u: Vec<f64> = (0..t).map(|j| 0.4 * (j as f64)).collect();
    let beta = matcha_beta_row(&prev, &p, &u);
    println!("beta: {:.4?}", beta.probs());
    println!("mass: {:.6}", beta.mass());

    // With binary stopping the span is unambiguous: previous stop 2,
    // current stop 5, so beta is a softmax over entries 2..=5 only.
    let prev_hot = AttentionRow::one_hot(2, t);
    let binary: Vec<f64> = (0..t).map(|j| clamp_p(if j == 5 { 1.0 } else { 0.0 })).collect();
    let beta_hot = matcha_beta_row(&prev_hot, &binary, &u);
    println!("binary-p beta, supported on the span 2..=5: {:.4?}", beta_hot.probs());

    // Decoding: stop == previous stop puts all weight on that single entry.
    let memory = Memory::new(Tensor::from_vec(
        (0..t).flat_map(|j| vec![j as f64]).collect(),
        t,
        1,
    ))?;
    let (stop, context) = matcha_decode_step(&memory, |_| 0.9, |_| 0.0, 4);
    println!("immediate stop: stop = {stop:?}, context = {context:?} (all weight on entry 4)");
    Ok(())
}
