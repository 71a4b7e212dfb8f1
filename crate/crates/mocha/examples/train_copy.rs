//! Train the toy transducer on the copy task — a strictly monotonic
//! alignment that every mechanism should master — then compare greedy
//! decoding against the inputs.
//!
//! Run with: cargo run --release --example train_copy

use mocha::transducer::{
    free_running_exact_accuracy, teacher_forced_accuracy, train, Mechanism, ModelConfig,
    TaskKind, TaskSpec, TrainOptions,
};

fn main() -> mocha::Result<()> {
    let task = TaskSpec::new(TaskKind::Copy, 5, 12, 16).with_samples(2048).with_seed(3);
    let eval = task.with_samples(128).generate_salted(2);
    let opts = TrainOptions {
        steps: 6000,
        early_stop_accuracy: Some(0.999),
        ..TrainOptions::default()
    };

    for mechanism in [Mechanism::Soft, Mechanism::Monotonic, Mechanism::Mocha { width: 2 }] {
        let config = ModelConfig { mechanism, seed: 3, ..ModelConfig::default() };
        let outcome = train(&task, &config, &opts)?;
        let tf = teacher_forced_accuracy(&outcome.params, &eval)?;
        let fr = free_running_exact_accuracy(&outcome.params, &eval)?;
        println!(
            "{mechanism}: {} steps, teacher-forced {tf:.4}, free-running exact {fr:.4}",
            outcome.curve.len()
        );

        let (input, _) = &eval.pairs[0];
        let decoded = outcome.params.greedy_transduce(input, 2 * input.len() + 5)?;
        println!("  input  (END-terminated): {input:?}");
        println!("  output (greedy decode):  {:?}", decoded.tokens);
    }
    Ok(())
}
