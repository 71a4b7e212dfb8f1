//! Alignment visualization: train a small chunkwise model on the copy task
//! and render the attention weights of a greedy decode as an SVG heatmap —
//! memory index across, output step down, weight as the shade of gray. A
//! trained copy model shows a near-diagonal band no wider than the chunk.
//!
//! Run with: cargo run --release --example alignment_heatmap

use mocha::plot::emit_alignment_plot;
use mocha::transducer::{train, Mechanism, ModelConfig, TaskKind, TaskSpec, TrainOptions};
use std::path::Path;

fn main() -> mocha::Result<()> {
    let task = TaskSpec::new(TaskKind::Copy, 6, 9, 16).with_samples(1024).with_seed(11);
    let config = ModelConfig {
        mechanism: Mechanism::Mocha { width: 2 },
        seed: 11,
        ..ModelConfig::default()
    };
    let opts = TrainOptions {
        steps: 4000,
        early_stop_accuracy: Some(0.995),
        ..TrainOptions::default()
    };
    let outcome = train(&task, &config, &opts)?;
    println!("trained for {} steps", outcome.curve.len());

    let (input, _) = &task.with_samples(1).generate_salted(1).pairs[0];
    let decoded = outcome.params.greedy_transduce(input, 2 * input.len() + 5)?;
    println!("input:  {input:?}");
    println!("output: {:?}", decoded.tokens);
    for (i, row) in decoded.trace.rows.iter().enumerate() {
        let cells: String = row
            .iter()
            .map(|&w| if w > 0.5 { '#' } else if w > 0.05 { '+' } else { '.' })
            .collect();
        println!("step {i:>2} |{cells}|");
    }

    let out = Path::new("target/alignment.svg");
    emit_alignment_plot(&decoded.trace, out)?;
    println!("wrote {}", out.display());
    Ok(())
}
