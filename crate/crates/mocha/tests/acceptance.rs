//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured quantities. Tests share a lock so the timed criteria never
//! run concurrently with the training-heavy ones.

use mocha::attention::{clamp_p, monotonic_alpha_row, AttentionRow, Role};
use mocha::bench::{fit_r_squared, run_speed_benchmark, BenchConfig};
use mocha::chunkwise::{matcha_beta_row, matcha_decode_step, mocha_beta_row, mocha_decode_step, ChunkConfig};
use mocha::energy::Memory;
use mocha::transducer::{
    free_running_exact_accuracy, gradient_check, teacher_forced_accuracy, train, Mechanism,
    ModelConfig, TaskKind, TaskSpec, TrainOptions,
};
use mocha::{monotonic_decode_step, Tensor};
use mocha_oracles::{matcha_beta_bruteforce, mocha_beta_bruteforce, monotonic_alpha_recursive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

fn serial() -> MutexGuard<'static, ()> {
    static GATE: OnceLock<Mutex<()>> = OnceLock::new();
    GATE.get_or_init(|| Mutex::new(())).lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn random_row(rng: &mut ChaCha8Rng, t: usize, normalized: bool) -> Vec<f64> {
    let mut a: Vec<f64> = (0..t).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = a.iter().sum();
    let scale = if normalized { 1.0 } else { rng.gen_range(0.2..1.0) };
    for x in a.iter_mut() {
        *x = *x / total * scale;
    }
    a
}

#[test]
fn criterion_01_monotonic_alpha_matches_recursive_oracle() {
    let _guard = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let t = rng.gen_range(1..=100);
        let p: Vec<f64> = (0..t).map(|_| rng.gen_range(0.01..0.99)).collect();
        let prev = random_row(&mut rng, t, true);
        let expected = monotonic_alpha_recursive(&p, &prev);
        let alpha = monotonic_alpha_row(&p, &AttentionRow::new(prev, Role::Monotonic));
        for (j, (a, e)) in alpha.probs().iter().zip(&expected).enumerate() {
            let err = (a - e).abs();
            worst = worst.max(err);
            assert!(err <= 1e-8, "trial {trial} T={t} j={j}: |{a} - {e}| = {err} > 1e-8");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 1 exceeded 10 s: {elapsed:?}");
    println!("criterion 1 PASS: 1000 trials, worst |alpha - oracle| = {worst:.3e}, {elapsed:?}");
}

#[test]
fn criterion_02_mocha_beta_matches_bruteforce_oracle() {
    let _guard = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let widths = [1usize, 2, 3, 4, 6, 8];
    let mut worst: f64 = 0.0;
    let mut trials = 0;
    for &w in &widths {
        for _ in 0..170 {
            trials += 1;
            let t = rng.gen_range(1..=50);
            let alpha = AttentionRow::new(random_row(&mut rng, t, false), Role::Monotonic);
            let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(w));
            let expected = mocha_beta_bruteforce(alpha.probs(), &u, w);
            for (j, (b, e)) in beta.probs().iter().zip(&expected).enumerate() {
                let err = (b - e).abs();
                worst = worst.max(err);
                assert!(err <= 1e-8, "w={w} T={t} j={j}: |{b} - {e}| = {err} > 1e-8");
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 2 exceeded 30 s: {elapsed:?}");
    println!(
        "criterion 2 PASS: {trials} trials over w in {widths:?}, worst error {worst:.3e}, {elapsed:?}"
    );
}

#[test]
fn criterion_03_matcha_beta_matches_bruteforce_oracle() {
    let _guard = serial();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut worst: f64 = 0.0;
    for trial in 0..500 {
        let t = rng.gen_range(1..=8);
        let prev = AttentionRow::new(random_row(&mut rng, t, false), Role::Monotonic);
        let p: Vec<f64> = (0..t).map(|_| rng.gen_range(0.01..0.99)).collect();
        let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let beta = matcha_beta_row(&prev, &p, &u);
        let expected = matcha_beta_bruteforce(prev.probs(), &p, &u).expect("T <= 8");
        for (j, (b, e)) in beta.probs().iter().zip(&expected).enumerate() {
            let err = (b - e).abs();
            worst = worst.max(err);
            assert!(err <= 1e-6, "trial {trial} T={t} j={j}: |{b} - {e}| = {err} > 1e-6");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 3 exceeded 30 s: {elapsed:?}");
    println!("criterion 3 PASS: 500 trials, worst error {worst:.3e}, {elapsed:?}");
}

#[test]
fn criterion_04_width_one_chunk_degenerates_to_monotonic() {
    let _guard = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let t = rng.gen_range(1..=60);
        let p: Vec<f64> = (0..t).map(|_| rng.gen_range(0.01..0.99)).collect();
        let prev = AttentionRow::new(random_row(&mut rng, t, true), Role::Monotonic);
        let alpha = monotonic_alpha_row(&p, &prev);
        let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(1));
        for (a, b) in alpha.probs().iter().zip(beta.probs()) {
            worst = worst.max((a - b).abs());
            assert!((a - b).abs() <= 1e-12, "w=1 must equal the monotonic row");
        }
    }
    println!("criterion 4 PASS: w=1 chunk equals monotonic alpha, worst gap {worst:.3e}");
}

#[test]
fn criterion_05_chunkwise_mass_matches_monotonic_mass() {
    let _guard = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let t = rng.gen_range(1..=40);
        let prev = AttentionRow::new(random_row(&mut rng, t, false), Role::Monotonic);
        let p: Vec<f64> = (0..t).map(|_| rng.gen_range(0.01..0.99)).collect();
        let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let w = rng.gen_range(1..=8);
        let alpha = monotonic_alpha_row(&p, &prev);
        let mocha_gap = (mocha_beta_row(&alpha, &u, ChunkConfig::new(w)).mass() - alpha.mass()).abs();
        let matcha_gap = (matcha_beta_row(&prev, &p, &u).mass() - alpha.mass()).abs();
        worst = worst.max(mocha_gap).max(matcha_gap);
        assert!(mocha_gap <= 1e-8, "mocha mass drift {mocha_gap} at T={t} w={w}");
        assert!(matcha_gap <= 1e-8, "matcha mass drift {matcha_gap} at T={t}");
    }
    println!("criterion 5 PASS: 10k rows, worst mass drift {worst:.3e}");
}

#[test]
fn criterion_06_decode_contexts_equal_expected_contexts_under_binary_p() {
    let _guard = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let dim = 4;
    let mut worst: f64 = 0.0;
    for trial in 0..300 {
        let t = rng.gen_range(2..=30);
        let t_prev = rng.gen_range(0..t);
        let stop_at = rng.gen_range(t_prev..t);
        let memory = Memory::new(Tensor::from_vec(
            (0..t * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            t,
            dim,
        ))
        .unwrap();
        let u: Vec<f64> = (0..t).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let binary: Vec<f64> = (0..t).map(|j| if j == stop_at { 1.0 } else { 0.0 }).collect();
        let clamped: Vec<f64> = binary.iter().map(|&x| clamp_p(x)).collect();
        let prev = AttentionRow::one_hot(t_prev, t);
        let w = rng.gen_range(1..=6);

        // hard monotonic
        let (stop, ctx) = monotonic_decode_step(&memory, |j| binary[j], t_prev);
        assert_eq!(stop, Some(stop_at));
        let alpha = monotonic_alpha_row(&clamped, &prev);
        let expected = alpha.expected_context(&memory);
        for (a, b) in ctx.iter().zip(&expected) {
            worst = worst.max((a - b).abs());
            assert!((a - b).abs() <= 1e-10, "monotonic trial {trial}: {a} vs {b}");
        }

        // fixed-width chunk
        let (stop, ctx) =
            mocha_decode_step(&memory, |j| binary[j], |j| u[j], t_prev, ChunkConfig::new(w));
        assert_eq!(stop, Some(stop_at));
        let beta = mocha_beta_row(&alpha, &u, ChunkConfig::new(w));
        let expected = beta.expected_context(&memory);
        for (a, b) in ctx.iter().zip(&expected) {
            worst = worst.max((a - b).abs());
            assert!((a - b).abs() <= 1e-10, "mocha trial {trial} w={w}: {a} vs {b}");
        }

        // adaptive chunk
        let (stop, ctx) = matcha_decode_step(&memory, |j| binary[j], |j| u[j], t_prev);
        assert_eq!(stop, Some(stop_at));
        let beta = matcha_beta_row(&prev, &clamped, &u);
        let expected = beta.expected_context(&memory);
        for (a, b) in ctx.iter().zip(&expected) {
            worst = worst.max((a - b).abs());
            assert!((a - b).abs() <= 1e-10, "matcha trial {trial}: {a} vs {b}");
        }
    }
    println!("criterion 6 PASS: 300 binary-p trials x 3 mechanisms, worst context gap {worst:.3e}");
}

#[test]
fn criterion_07_analytic_gradients_match_finite_differences() {
    let _guard = serial();
    let batch = TaskSpec::new(TaskKind::Copy, 3, 6, 8).with_samples(2).with_seed(5).generate();
    for mechanism in [
        Mechanism::Soft,
        Mechanism::Monotonic,
        Mechanism::Mocha { width: 2 },
        Mechanism::Matcha,
    ] {
        let config = ModelConfig::tiny(mechanism, 23);
        let report = gradient_check(&config, &batch.pairs, 1e-5, 1e-4).unwrap();
        let frac = report.pass_fraction();
        assert!(
            frac >= 0.99,
            "{mechanism}: {}/{} coordinates within 1e-4 (fraction {frac:.4}, worst {:.2e})",
            report.passing + report.negligible,
            report.total,
            report.worst_rel_err
        );
        println!(
            "criterion 7 [{mechanism}] PASS: {}/{} coordinates ({} negligible), worst rel err {:.2e}",
            report.passing + report.negligible,
            report.total,
            report.negligible,
            report.worst_rel_err
        );
    }
}

#[test]
fn criterion_08_decode_cost_scales_quadratic_vs_linear() {
    let _guard = serial();
    let start = Instant::now();
    let cfg = BenchConfig { trials: 20, ..BenchConfig::default() };
    let records = run_speed_benchmark(&cfg);

    let series = |name: &str, w: usize| -> Vec<f64> {
        let mut pts: Vec<(usize, f64)> = records
            .iter()
            .filter(|r| r.mechanism == name && r.w == w)
            .map(|r| (r.t, r.mean_seconds))
            .collect();
        pts.sort_by_key(|(t, _)| *t);
        pts.into_iter().map(|(_, s)| s).collect()
    };
    let xs: Vec<f64> = cfg.lengths.iter().map(|&t| t as f64).collect();
    let soft = series("soft", 0);
    let monotonic = series("monotonic", 1);
    let mocha2 = series("mocha", 2);
    let mocha4 = series("mocha", 4);
    let mocha8 = series("mocha", 8);

    let (_, _, r2_soft) = fit_r_squared(&xs, &soft, |x| x * x);
    assert!(r2_soft >= 0.95, "soft attention should fit a + b*T^2: R^2 = {r2_soft}");
    let (_, _, r2_mocha) = fit_r_squared(&xs, &mocha2, |x| x);
    assert!(r2_mocha >= 0.95, "mocha w=2 should fit a + b*T: R^2 = {r2_mocha}");

    let ratio_small = soft[0] / mocha2[0];
    let ratio_large = soft[9] / mocha2[9];
    assert!(
        ratio_large > ratio_small,
        "speedup must grow with T: {ratio_small} at T=10 vs {ratio_large} at T=100"
    );

    for i in 0..xs.len() {
        assert!(
            monotonic[i] <= mocha2[i] && mocha2[i] <= mocha4[i] && mocha4[i] <= mocha8[i],
            "mean time must be nondecreasing in w at T={}: w1={} w2={} w4={} w8={}",
            xs[i],
            monotonic[i],
            mocha2[i],
            mocha4[i],
            mocha8[i]
        );
    }

    assert!(
        mocha8[0] <= 2.0 * soft[0],
        "at T=U=10 a w=8 chunk spans the memory, so costs must be comparable: {} vs {}",
        mocha8[0],
        soft[0]
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "criterion 8 exceeded 5 min: {elapsed:?}");
    println!(
        "criterion 8 PASS: soft R^2(T^2) = {r2_soft:.4}, mocha(w=2) R^2(T) = {r2_mocha:.4}, \
         speedup {ratio_small:.1}x -> {ratio_large:.1}x, w-monotone, w=8 vs soft at T=10: \
         {:.2}x, {elapsed:?}",
        mocha8[0] / soft[0]
    );
}

#[test]
fn criterion_09a_every_mechanism_learns_the_copy_task() {
    let _guard = serial();
    let start = Instant::now();
    let task = TaskSpec::new(TaskKind::Copy, 5, 12, 16).with_samples(2048).with_seed(3);
    let eval = task.with_samples(256).generate_salted(2);
    let opts = TrainOptions {
        steps: 20_000,
        early_stop_accuracy: Some(0.999),
        ..TrainOptions::default()
    };
    let mut mocha_model = None;
    for mechanism in [Mechanism::Soft, Mechanism::Monotonic, Mechanism::Mocha { width: 2 }] {
        let config = ModelConfig { mechanism, seed: 3, ..ModelConfig::default() };
        let outcome = train(&task, &config, &opts).unwrap();
        let steps = outcome.curve.len();
        assert!(steps <= 20_000);
        let acc = teacher_forced_accuracy(&outcome.params, &eval).unwrap();
        assert!(
            acc >= 0.99,
            "{mechanism} reached only {acc:.4} teacher-forced accuracy in {steps} steps"
        );
        println!("criterion 9a [{mechanism}] PASS: {acc:.4} teacher-forced accuracy in {steps} steps");
        if matches!(mechanism, Mechanism::Mocha { .. }) {
            mocha_model = Some(outcome.params);
        }
    }

    // The trained chunkwise model's alignment is a near-diagonal band no
    // wider than the chunk: per decoded step, all weight within w of the
    // stop, and stops advance with the output.
    let params = mocha_model.unwrap();
    let (input, _) = &eval.pairs[0];
    let decoded = params.greedy_transduce(input, 2 * input.len() + 5).unwrap();
    assert!(!decoded.truncated);
    for (row, stop) in decoded.trace.rows.iter().zip(&decoded.trace.stops) {
        let stop = stop.expect("trained copy model always stops");
        for (j, &wgt) in row.iter().enumerate() {
            if wgt > 1e-9 {
                assert!(
                    j + 2 > stop && j <= stop,
                    "weight {wgt} at {j} outside the w=2 chunk ending at {stop}"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    println!("criterion 9a PASS: all three mechanisms >= 0.99, mocha alignment band <= w, {elapsed:?}");
}

#[test]
fn criterion_09b_chunks_beat_hard_monotonic_on_local_reordering() {
    let _guard = serial();
    let start = Instant::now();
    // Narrow memory entries (d_h = 5) so one entry cannot hold a whole
    // swapped pair: the chunk mechanism reads both entries directly, a hard
    // monotonic head cannot. Everything else is shared.
    let seeds = [1u64, 2, 3];
    let opts = TrainOptions {
        steps: 6000,
        early_stop_accuracy: Some(0.995),
        ..TrainOptions::default()
    };
    let mut mean = [0.0f64, 0.0];
    for (idx, mechanism) in [Mechanism::Mocha { width: 2 }, Mechanism::Monotonic]
        .into_iter()
        .enumerate()
    {
        for &seed in &seeds {
            let task =
                TaskSpec::new(TaskKind::PairSwap, 6, 10, 16).with_samples(512).with_seed(seed);
            let eval = task.with_samples(200).generate_salted(2);
            let config = ModelConfig { mechanism, seed, d_h: 5, ..ModelConfig::default() };
            let outcome = train(&task, &config, &opts).unwrap();
            let acc = free_running_exact_accuracy(&outcome.params, &eval).unwrap();
            println!("criterion 9b [{mechanism} seed {seed}]: exact-sequence accuracy {acc:.3}");
            mean[idx] += acc / seeds.len() as f64;
        }
    }
    let margin = mean[0] - mean[1];
    assert!(
        margin >= 0.10,
        "mocha(w=2) must beat monotonic by >= 10 points on pair_swap: \
         {:.3} vs {:.3} (margin {:.1} points)",
        mean[0],
        mean[1],
        100.0 * margin
    );
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1800.0,
        "criterion 9 training budget exceeded 30 min: {elapsed:?}"
    );
    println!(
        "criterion 9b PASS: mocha {:.3} vs monotonic {:.3} over 3 seeds (margin {:+.1} points), {elapsed:?}",
        mean[0],
        mean[1],
        100.0 * margin
    );
}

#[test]
fn criterion_10_decoders_never_read_past_the_stop() {
    let _guard = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA);
    let mut sessions = 0;
    for _ in 0..100 {
        let t = rng.gen_range(4..=60);
        let dim = 3;
        let memory = Memory::new(Tensor::from_vec(
            (0..t * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            t,
            dim,
        ))
        .unwrap();
        // a random nondecreasing stop schedule over several output steps
        let steps = rng.gen_range(1..=6);
        let mut stops: Vec<usize> = (0..steps).map(|_| rng.gen_range(0..t)).collect();
        stops.sort_unstable();
        let w = rng.gen_range(1..=8);

        for mechanism in 0..3 {
            let mut cursor = 0usize;
            for &scheduled in &stops {
                let max_touched = std::cell::Cell::new(0usize);
                let track = |j: usize| max_touched.set(max_touched.get().max(j));
                let p = |j: usize| if j >= scheduled { 0.8 } else { 0.2 };
                let (stop, _) = match mechanism {
                    0 => monotonic_decode_step(
                        &memory,
                        |j| {
                            track(j);
                            p(j)
                        },
                        cursor,
                    ),
                    1 => mocha_decode_step(
                        &memory,
                        |j| {
                            track(j);
                            p(j)
                        },
                        |j| {
                            track(j);
                            0.1
                        },
                        cursor,
                        ChunkConfig::new(w),
                    ),
                    _ => matcha_decode_step(
                        &memory,
                        |j| {
                            track(j);
                            p(j)
                        },
                        |j| {
                            track(j);
                            0.1
                        },
                        cursor,
                    ),
                };
                let stop = stop.expect("schedule guarantees a stop");
                assert!(
                    max_touched.get() <= stop,
                    "mechanism {mechanism}: touched index {} past stop {stop}",
                    max_touched.get()
                );
                cursor = stop;
                sessions += 1;
            }
        }
    }
    println!("criterion 10 PASS: {sessions} instrumented decode steps, no read past any stop");
}
