//! Decode-cost scaling: soft attention touches the whole memory at every
//! output step (quadratic in T when T = U), the monotonic family advances a
//! cursor (linear, with a constant factor from the chunk width). Runs a
//! reduced grid, prints the CSV, fits both growth laws, and writes an SVG.
//!
//! Run with: cargo run --release --example speed_benchmark

use mocha::bench::{csv_string, fit_r_squared, run_speed_benchmark, BenchConfig};
use mocha::plot::emit_scaling_plot;
use std::path::Path;

fn main() -> mocha::Result<()> {
    let cfg = BenchConfig {
        trials: 10,
        lengths: (1..=10).map(|k| 10 * k).collect(),
        ..BenchConfig::default()
    };
    let records = run_speed_benchmark(&cfg);
    print!("{}", csv_string(&records));

    let series = |name: &str, w: usize| -> (Vec<f64>, Vec<f64>) {
        records
            .iter()
            .filter(|r| r.mechanism == name && r.w == w)
            .map(|r| (r.t as f64, r.mean_seconds))
            .unzip()
    };
    let (xs, soft) = series("soft", 0);
    let (_, mocha2) = series("mocha", 2);
    let (_, _, r2_soft) = fit_r_squared(&xs, &soft, |x| x * x);
    let (_, _, r2_mocha) = fit_r_squared(&xs, &mocha2, |x| x);
    println!("\nsoft  vs a + b*T^2: R^2 = {r2_soft:.4}");
    println!("mocha(w=2) vs a + b*T: R^2 = {r2_mocha:.4}");
    println!(
        "speedup soft/mocha(w=2): {:.1}x at T=10, {:.1}x at T=100",
        soft[0] / mocha2[0],
        soft[9] / mocha2[9]
    );

    let out = Path::new("target/scaling.svg");
    emit_scaling_plot(&records, out)?;
    println!("wrote {}", out.display());
    Ok(())
}
