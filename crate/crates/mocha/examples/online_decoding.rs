//! The online contract, made visible: decode steps take lazy energy
//! suppliers, and instrumenting them shows that no memory index past the
//! stop position is ever evaluated — the defining property that lets these
//! mechanisms run while input is still arriving.
//!
//! Run with: cargo run --release --example online_decoding

use mocha::{matcha_decode_step, mocha_decode_step, monotonic_decode_step, ChunkConfig, Memory, Tensor};
use std::cell::Cell;

fn main() -> mocha::Result<()> {
    let t = 40;
    let memory = Memory::new(Tensor::from_vec(
        (0..t * 2).map(|i| (i as f64 * 0.3).cos()).collect(),
        t,
        2,
    ))?;
    let stop_at = 13;
    let p = move |j: usize| if j == stop_at { 0.99 } else { 0.01 };

    let max_probed = Cell::new(0usize);
    let probe = |j: usize| {
        max_probed.set(max_probed.get().max(j));
        p(j)
    };
    let (stop, _) = monotonic_decode_step(&memory, probe, 0);
    println!("monotonic: stop = {stop:?}, highest index probed = {}", max_probed.get());

    for width in [2, 8] {
        let max_probed = Cell::new(0usize);
        let max_chunk = Cell::new(0usize);
        let (stop, _) = mocha_decode_step(
            &memory,
            |j| {
                max_probed.set(max_probed.get().max(j));
                p(j)
            },
            |j| {
                max_chunk.set(max_chunk.get().max(j));
                0.25
            },
            0,
            ChunkConfig::new(width),
        );
        println!(
            "mocha w={width}: stop = {stop:?}, highest probe = {}, highest chunk read = {}",
            max_probed.get(),
            max_chunk.get()
        );
    }

    let max_chunk = Cell::new(0usize);
    let (stop, _) = matcha_decode_step(
        &memory,
        p,
        |j| {
            max_chunk.set(max_chunk.get().max(j));
            0.25
        },
        5,
    );
    println!("matcha from cursor 5: stop = {stop:?}, highest chunk read = {}", max_chunk.get());
    println!("entries {}..{} were never touched by any mechanism", stop_at + 1, t);
    Ok(())
}
