//! Central-difference validation of the analytic gradients, mechanism by
//! mechanism: the tape's backward pass against finite differences of the
//! independent plain forward path, over every parameter group of a small
//! model.
//!
//! Run with: cargo run --release --example gradient_check

use mocha::transducer::{gradient_check, Mechanism, ModelConfig, TaskKind, TaskSpec};

fn main() -> mocha::Result<()> {
    let batch = TaskSpec::new(TaskKind::Copy, 3, 5, 8)
        .with_samples(2)
        .with_seed(5)
        .generate()
        .pairs;

    for mechanism in [
        Mechanism::Soft,
        Mechanism::Monotonic,
        Mechanism::Mocha { width: 2 },
        Mechanism::Matcha,
    ] {
        let config = ModelConfig::tiny(mechanism, 17);
        let report = gradient_check(&config, &batch, 1e-5, 1e-4)?;
        println!(
            "{mechanism}: {}/{} coordinates agree (rel err < 1e-4), {} negligible, worst rel err {:.2e}",
            report.passing + report.negligible,
            report.total,
            report.negligible,
            report.worst_rel_err,
        );
        for (group, pass, total) in &report.per_group {
            if pass != total {
                println!("  {group}: {pass}/{total}");
            }
        }
    }
    Ok(())
}
