//! Standard soft attention: additive energies over the whole memory, a
//! max-shifted softmax, and the weighted-average context vector.
//!
//! Run with: cargo run --release --example soft_attention

use mocha::{soft_attention, AdditiveEnergyParams, DecoderQuery, Memory, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mocha::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // A memory of T = 6 entries with hidden size 4, plus one decoder state.
    let t = 6;
    let d_h = 4;
    let memory = Memory::new(Tensor::from_vec(
        (0..t * d_h).map(|i| ((i * 37 % 17) as f64 - 8.0) / 8.0).collect(),
        t,
        d_h,
    ))?;
    let query = DecoderQuery::new(vec![0.3, -0.8, 0.1])?;

    let params = AdditiveEnergyParams::init(8, d_h, 3, &mut rng);
    let energies = params.energies(&query, &memory)?;
    println!("energies: {energies:.3?}");

    let (alpha, context) = soft_attention(&energies, &memory);
    println!("alpha:    {:.3?}", alpha.probs());
    println!("sum(alpha) = {:.12}", alpha.mass());
    println!("context:  {context:.3?}");

    // The context interpolates the memory: crank one energy far up and the
    // context collapses onto that entry.
    let mut peaked = energies.clone();
    peaked[2] += 50.0;
    let (_, context2) = soft_attention(&peaked, &memory);
    println!("context with entry 2 dominant: {context2:.3?}");
    println!("memory entry 2:                {:.3?}", memory.entry(2));
    Ok(())
}
