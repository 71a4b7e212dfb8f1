//! MoChA: soft attention over a fixed-width chunk ending wherever the
//! monotonic mechanism stops. Shows the expected training distribution, the
//! equivalence at w = 1 with plain monotonic attention, and an online
//! decode step with a clipped chunk at the memory edge.
//!
//! Run with: cargo run --release --example mocha_chunks

use mocha::{
    mocha_beta_row, mocha_decode_step, monotonic_alpha_row, AttentionRow, ChunkConfig, Memory,
    Tensor,
};

fn main() -> mocha::Result<()> {
    let t = 10;
    let p: Vec<f64> = (0..t).map(|j| if j == 5 { 0.8 } else { 0.1 }).collect();
    let u: Vec<f64> = (0..t).map(|j| (j as f64 * 0.9).sin()).collect();

    let alpha = monotonic_alpha_row(&p, &AttentionRow::one_hot(0, t));
    println!("alpha:        {:.3?}", alpha.probs());

    for width in [1, 2, 4] {
        let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(width));
        println!("beta (w={width}):   {:.3?}", beta.probs());
        println!("  mass alpha {:.6} vs beta {:.6}", alpha.mass(), beta.mass());
    }
    // w = 1 recovers hard monotonic attention exactly.
    let w1 = mocha_beta_row(&alpha, &u, ChunkConfig::new(1));
    assert_eq!(w1.probs(), alpha.probs());
    println!("w=1 equals the monotonic row bit for bit");

    // Online decode: the chunk covers [stop-w+1, stop], clipped at the left
    // edge, and the context is its softmax-weighted average.
    let memory = Memory::new(Tensor::from_vec(
        (0..t).flat_map(|j| vec![j as f64]).collect(),
        t,
        1,
    ))?;
    let binary_p: Vec<f64> = (0..t).map(|j| if j == 1 { 1.0 } else { 0.0 }).collect();
    let (stop, context) =
        mocha_decode_step(&memory, |j| binary_p[j], |_| 0.0, 0, ChunkConfig::new(4));
    println!("stop at {stop:?} with w=4: chunk clipped to entries 0..=1, context = {context:?}");
    Ok(())
}
