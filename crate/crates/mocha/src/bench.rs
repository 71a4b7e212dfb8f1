//! Synthetic decoding-speed benchmark.
//!
//! Measures the attention mechanisms alone: no recurrent networks, just
//! randomly generated memories and decoder states, so the timings isolate
//! how decode cost scales with sequence length. Soft attention touches all
//! T entries per output step (quadratic overall when T = U); the monotonic
//! family advances a cursor and touches O(T/U + w) entries per step
//! (linear).
//!
//! Stopping decisions are driven by a seeded stop schedule rather than by
//! the untrained energies: U positions are drawn uniformly in [0, T) and
//! sorted, so the cursor advances T/U entries per step on average. The
//! monotonic energies are still computed for every inspected entry — they
//! are the cost being measured — only the threshold decision comes from the
//! schedule.

use crate::attention::{monotonic_decode_step, soft_attention};
use crate::chunkwise::{matcha_decode_step, mocha_decode_step, ChunkConfig};
use crate::energy::{AdditiveEnergyParams, DecoderQuery, Memory, NormalizedEnergyParams};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::transducer::Mechanism;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// One benchmark measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub mechanism: String,
    pub t: usize,
    pub u: usize,
    /// Chunk width: 0 for soft and adaptive chunks, 1 for hard monotonic.
    pub w: usize,
    pub mean_seconds: f64,
    pub trials: usize,
    pub dim: usize,
    pub seed: u64,
    pub stddev_seconds: f64,
}

pub const CSV_HEADER: &str = "mechanism,T,U,w,mean_seconds,trials,dim,seed,stddev_seconds";

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Encoder/decoder state dimensionality.
    pub dim: usize,
    /// Sequence lengths; T = U at every grid point.
    pub lengths: Vec<usize>,
    pub mechanisms: Vec<Mechanism>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            dim: 256,
            lengths: default_lengths(),
            mechanisms: default_mechanisms(),
            trials: 100,
            seed: 0,
        }
    }
}

pub fn default_lengths() -> Vec<usize> {
    (1..=10).map(|k| 10 * k).collect()
}

/// The standard grid: soft attention, hard monotonic, and fixed chunks of
/// width 2, 4, and 8.
pub fn default_mechanisms() -> Vec<Mechanism> {
    vec![
        Mechanism::Soft,
        Mechanism::Monotonic,
        Mechanism::Mocha { width: 2 },
        Mechanism::Mocha { width: 4 },
        Mechanism::Mocha { width: 8 },
    ]
}

/// Everything a decode pass reads: seeded memory, decoder states, energy
/// parameters, and the stop schedule. Two configs with equal seeds generate
/// identical inputs.
pub struct BenchInputs {
    pub memory: Memory,
    pub queries: Vec<DecoderQuery>,
    /// Nondecreasing scheduled stop positions, one per output step.
    pub stops: Vec<usize>,
    pub soft_energy: AdditiveEnergyParams,
    pub mono_energy: NormalizedEnergyParams,
    pub chunk_energy: NormalizedEnergyParams,
}

impl BenchInputs {
    pub fn generate(seed: u64, t: usize, u: usize, dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((t as u64) << 20) ^ (u as u64));
        let d_attn = (dim / 2).max(1);
        let memory = Memory::new(Tensor::from_vec(
            (0..t * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            t,
            dim,
        ))
        .expect("finite random memory");
        let queries = (0..u)
            .map(|_| {
                DecoderQuery::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .expect("finite random query")
            })
            .collect();
        let mut stops: Vec<usize> = (0..u).map(|_| rng.gen_range(0..t)).collect();
        stops.sort_unstable();
        let soft_energy = AdditiveEnergyParams::init(d_attn, dim, dim, &mut rng);
        let mono_energy = NormalizedEnergyParams::init(d_attn, dim, dim, -0.5, &mut rng);
        let chunk_energy = NormalizedEnergyParams::init(d_attn, dim, dim, 0.0, &mut rng);
        BenchInputs { memory, queries, stops, soft_energy, mono_energy, chunk_energy }
    }
}

/// One full decode pass (U output steps) for a mechanism. Returns a
/// checksum folding every computed energy and context so the optimizer
/// cannot discard the work.
pub fn run_pass(mechanism: Mechanism, inputs: &BenchInputs) -> f64 {
    let memory = &inputs.memory;
    let mut checksum = 0.0;
    match mechanism {
        Mechanism::Soft => {
            for query in &inputs.queries {
                let energies =
                    inputs.soft_energy.energies(query, memory).expect("consistent shapes");
                let (_, ctx) = soft_attention(&energies, memory);
                checksum += ctx[0];
            }
        }
        Mechanism::Monotonic => {
            let mut cursor = 0usize;
            for (query, &scheduled) in inputs.queries.iter().zip(&inputs.stops) {
                let prepared = inputs.mono_energy.prepare(query).expect("consistent shapes");
                let mut sink = 0.0;
                let (stop, ctx) = monotonic_decode_step(
                    memory,
                    |j| {
                        sink += prepared.energy(memory, j).expect("consistent shapes");
                        if j >= scheduled {
                            0.9
                        } else {
                            0.1
                        }
                    },
                    cursor,
                );
                cursor = stop.unwrap_or(cursor);
                checksum += sink + ctx[0];
            }
        }
        Mechanism::Mocha { width } => {
            let cfg = ChunkConfig::new(width);
            let mut cursor = 0usize;
            for (query, &scheduled) in inputs.queries.iter().zip(&inputs.stops) {
                let mono = inputs.mono_energy.prepare(query).expect("consistent shapes");
                let chunk = inputs.chunk_energy.prepare(query).expect("consistent shapes");
                let mut sink = 0.0;
                let (stop, ctx) = mocha_decode_step(
                    memory,
                    |j| {
                        sink += mono.energy(memory, j).expect("consistent shapes");
                        if j >= scheduled {
                            0.9
                        } else {
                            0.1
                        }
                    },
                    |j| chunk.energy(memory, j).expect("consistent shapes"),
                    cursor,
                    cfg,
                );
                cursor = stop.unwrap_or(cursor);
                checksum += sink + ctx[0];
            }
        }
        Mechanism::Matcha => {
            let mut cursor = 0usize;
            for (query, &scheduled) in inputs.queries.iter().zip(&inputs.stops) {
                let mono = inputs.mono_energy.prepare(query).expect("consistent shapes");
                let chunk = inputs.chunk_energy.prepare(query).expect("consistent shapes");
                let mut sink = 0.0;
                let (stop, ctx) = matcha_decode_step(
                    memory,
                    |j| {
                        sink += mono.energy(memory, j).expect("consistent shapes");
                        if j >= scheduled {
                            0.9
                        } else {
                            0.1
                        }
                    },
                    |j| chunk.energy(memory, j).expect("consistent shapes"),
                    cursor,
                );
                cursor = stop.unwrap_or(cursor);
                checksum += sink + ctx[0];
            }
        }
    }
    checksum
}

/// Wall-clock benchmark over the full (mechanism, length) grid: one untimed
/// warmup pass per cell, then the mean and standard deviation of `trials`
/// timed passes.
pub fn run_speed_benchmark(cfg: &BenchConfig) -> Vec<BenchRecord> {
    assert!(!cfg.lengths.is_empty(), "no sequence lengths given");
    assert!(cfg.trials >= 1, "at least one trial required");
    let mut records = Vec::new();
    for &mechanism in &cfg.mechanisms {
        for &len in &cfg.lengths {
            let inputs = BenchInputs::generate(cfg.seed, len, len, cfg.dim);
            black_box(run_pass(mechanism, &inputs));
            let mut times = Vec::with_capacity(cfg.trials);
            for _ in 0..cfg.trials {
                let start = Instant::now();
                black_box(run_pass(mechanism, &inputs));
                times.push(start.elapsed().as_secs_f64());
            }
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            let var =
                times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / times.len() as f64;
            records.push(BenchRecord {
                mechanism: mechanism.name().to_string(),
                t: len,
                u: len,
                w: mechanism.width_code(),
                mean_seconds: mean,
                trials: cfg.trials,
                dim: cfg.dim,
                seed: cfg.seed,
                stddev_seconds: var.sqrt(),
            });
        }
    }
    records
}

pub fn csv_string(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.mechanism, r.t, r.u, r.w, r.mean_seconds, r.trials, r.dim, r.seed, r.stddev_seconds
        ));
    }
    out
}

pub fn emit_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    file.write_all(csv_string(records).as_bytes())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Malformed {
                what: "benchmark csv",
                detail: format!("bad header: {other:?}"),
            })
        }
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Malformed {
                what: "benchmark csv",
                detail: format!("line {}: expected 9 fields, got {}", n + 2, fields.len()),
            });
        }
        let parse_err =
            |what: &'static str| Error::Malformed { what, detail: format!("line {}", n + 2) };
        records.push(BenchRecord {
            mechanism: fields[0].to_string(),
            t: fields[1].parse().map_err(|_| parse_err("T"))?,
            u: fields[2].parse().map_err(|_| parse_err("U"))?,
            w: fields[3].parse().map_err(|_| parse_err("w"))?,
            mean_seconds: fields[4].parse().map_err(|_| parse_err("mean_seconds"))?,
            trials: fields[5].parse().map_err(|_| parse_err("trials"))?,
            dim: fields[6].parse().map_err(|_| parse_err("dim"))?,
            seed: fields[7].parse().map_err(|_| parse_err("seed"))?,
            stddev_seconds: fields[8].parse().map_err(|_| parse_err("stddev_seconds"))?,
        });
    }
    Ok(records)
}

/// Least-squares fit of y against a + b * f(x); returns (a, b, r_squared).
pub fn fit_r_squared(xs: &[f64], ys: &[f64], f: impl Fn(f64) -> f64) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mean_x = fx.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in fx.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let b = sxy / sxx;
    let a = mean_y - b * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in fx.iter().zip(ys) {
        let pred = a + b * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    (a, b, 1.0 - ss_res / ss_tot)
}
