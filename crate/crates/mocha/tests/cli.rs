//! End-to-end command-line checks: exit codes, flag validation, and the
//! files each subcommand leaves behind.

use mocha::bench::parse_csv;
use mocha::cli::cli_main;
use std::path::PathBuf;

fn run(args: &[&str]) -> i32 {
    cli_main(args.iter().map(|s| s.to_string()))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mocha-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn bench_smoke_run_writes_parseable_csv() {
    let dir = temp_dir("bench");
    let out = dir.join("bench.csv");
    let code = run(&[
        "mocha", "bench", "--trials", "1", "--max-len", "20", "--dim", "16",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let records = parse_csv(&text).unwrap();
    // 5 default mechanisms x lengths {10, 20}
    assert_eq!(records.len(), 10);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn bench_single_mechanism_with_plot() {
    let dir = temp_dir("bench-plot");
    let out = dir.join("soft.csv");
    let plot = dir.join("scaling.svg");
    let code = run(&[
        "mocha", "bench", "--mechanism", "soft", "--trials", "1", "--min-len", "10",
        "--max-len", "30", "--dim", "8",
        "--out", out.to_str().unwrap(), "--plot", plot.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let svg = std::fs::read_to_string(&plot).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<polyline").count(), 1);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn bench_rejects_chunk_size_for_chunkless_mechanisms() {
    assert_eq!(run(&["mocha", "bench", "--mechanism", "soft", "--chunk-size", "4"]), 2);
    assert_eq!(run(&["mocha", "bench", "--mechanism", "monotonic", "--chunk-size", "4"]), 2);
    assert_eq!(run(&["mocha", "bench", "--mechanism", "matcha", "--chunk-size", "4"]), 2);
}

#[test]
fn bench_unwritable_output_path_fails_with_nonzero_exit() {
    let code = run(&[
        "mocha", "bench", "--trials", "1", "--min-len", "10", "--max-len", "10", "--dim", "8",
        "--out", "/nonexistent-dir/definitely/not/writable.csv",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn train_then_eval_round_trip() {
    let dir = temp_dir("train");
    let run_dir = dir.join("run");
    // A deliberately short run: the artifact layout is under test, not the
    // final accuracy.
    let code = run(&[
        "mocha", "train", "--task", "copy", "--mechanism", "mocha", "--chunk-size", "2",
        "--seed", "7", "--steps", "60", "--out-dir", run_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(run_dir.join("config.txt").exists());
    assert!(run_dir.join("loss.csv").exists());
    assert!(run_dir.join("model.json").exists());

    let config = std::fs::read_to_string(run_dir.join("config.txt")).unwrap();
    assert!(config.contains("task=copy"));
    assert!(config.contains("mechanism=mocha"));
    assert!(config.contains("w=2"));
    assert!(config.contains("seed=7"));
    assert!(config.contains("optimizer=adam"));

    let loss = std::fs::read_to_string(run_dir.join("loss.csv")).unwrap();
    assert!(loss.starts_with("step,loss,accuracy\n"));
    assert_eq!(loss.lines().count(), 61, "one row per training step plus header");

    let alignments: Vec<_> = std::fs::read_dir(run_dir.join("alignments"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert!(!alignments.is_empty());
    assert!(alignments.iter().all(|name| name.starts_with("step_") && name.ends_with(".svg")));

    let code = run(&[
        "mocha", "eval", "--model-dir", run_dir.to_str().unwrap(), "--emit-alignments",
    ]);
    assert_eq!(code, 0);
    assert!(run_dir.join("alignments").join("eval_0.svg").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn train_rejects_pair_swap_chunk_mismatch() {
    let dir = temp_dir("reject");
    let code = run(&[
        "mocha", "train", "--task", "pair_swap", "--mechanism", "soft", "--chunk-size", "2",
        "--out-dir", dir.join("x").to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn eval_of_missing_model_dir_is_a_runtime_error() {
    assert_eq!(run(&["mocha", "eval", "--model-dir", "/nonexistent-dir/none"]), 1);
}
