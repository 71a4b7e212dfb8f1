//! Command-line entry points: `bench` (decode-speed grid), `train` (toy
//! transducer runs), and `eval` (reload a run directory and score it).
//!
//! Exit codes: 0 on success, 2 for usage errors (unknown flags or invalid
//! flag combinations), 1 for runtime failures such as unwritable paths.

use crate::bench::{default_mechanisms, emit_csv, run_speed_benchmark, BenchConfig};
use crate::error::Error;
use crate::plot;
use crate::transducer::{
    free_running_exact_accuracy, load_model, save_run, teacher_forced_accuracy, train, Mechanism,
    ModelConfig, TaskKind, TaskSpec, TrainOptions,
};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "mocha",
    about = "Streaming attention mechanisms: decode-speed benchmarks and toy transduction runs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MechanismArg {
    Soft,
    Monotonic,
    Mocha,
    Matcha,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Copy,
    #[value(name = "pair_swap", alias = "pair-swap")]
    PairSwap,
}

#[derive(Subcommand)]
enum Command {
    /// Time the attention mechanisms over a grid of sequence lengths
    Bench {
        /// Benchmark a single mechanism instead of the default grid
        #[arg(long, value_enum)]
        mechanism: Option<MechanismArg>,
        /// Chunk width; only valid together with --mechanism mocha
        #[arg(long)]
        chunk_size: Option<usize>,
        #[arg(long, default_value_t = 10)]
        min_len: usize,
        #[arg(long, default_value_t = 100)]
        max_len: usize,
        #[arg(long, default_value_t = 10)]
        step: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Encoder/decoder state dimensionality
        #[arg(long, default_value_t = 256)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV output path
        #[arg(long, default_value = "bench.csv")]
        out: PathBuf,
        /// Optional SVG scaling plot
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Train the toy transducer on a synthetic task
    Train {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, value_enum)]
        mechanism: MechanismArg,
        /// Chunk width; only valid together with --mechanism mocha (default 2)
        #[arg(long)]
        chunk_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4000)]
        steps: usize,
        /// Run directory for config.txt, loss.csv, model.json, alignments/
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a trained run directory on held-out data
    Eval {
        #[arg(long)]
        model_dir: PathBuf,
        /// Render alignment heatmaps for a few held-out sequences
        #[arg(long)]
        emit_alignments: bool,
    },
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve_mechanism(
    arg: MechanismArg,
    chunk_size: Option<usize>,
) -> Result<Mechanism, CliError> {
    match (arg, chunk_size) {
        (MechanismArg::Mocha, w) => {
            let width = w.unwrap_or(2);
            if width == 0 {
                return Err(CliError::Usage("--chunk-size must be at least 1".into()));
            }
            Ok(Mechanism::Mocha { width })
        }
        (MechanismArg::Soft, Some(_)) => {
            Err(CliError::Usage("--chunk-size only applies to --mechanism mocha; soft attention has no chunks".into()))
        }
        (MechanismArg::Monotonic, Some(_)) => {
            Err(CliError::Usage("--chunk-size only applies to --mechanism mocha; hard monotonic attention is the w=1 case".into()))
        }
        (MechanismArg::Matcha, Some(_)) => {
            Err(CliError::Usage("--chunk-size only applies to --mechanism mocha; matcha chunks are adaptive".into()))
        }
        (MechanismArg::Soft, None) => Ok(Mechanism::Soft),
        (MechanismArg::Monotonic, None) => Ok(Mechanism::Monotonic),
        (MechanismArg::Matcha, None) => Ok(Mechanism::Matcha),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Bench {
            mechanism,
            chunk_size,
            min_len,
            max_len,
            step,
            trials,
            dim,
            seed,
            out,
            plot,
        } => {
            if min_len == 0 || min_len > max_len {
                return Err(CliError::Usage(format!(
                    "invalid length range {min_len}..{max_len}"
                )));
            }
            if step == 0 {
                return Err(CliError::Usage("--step must be positive".into()));
            }
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let mechanisms = match mechanism {
                Some(arg) => vec![resolve_mechanism(arg, chunk_size)?],
                None => {
                    if chunk_size.is_some() {
                        return Err(CliError::Usage(
                            "--chunk-size requires --mechanism mocha".into(),
                        ));
                    }
                    default_mechanisms()
                }
            };
            let cfg = BenchConfig {
                dim,
                lengths: (min_len..=max_len).step_by(step).collect(),
                mechanisms,
                trials,
                seed,
            };
            let records = run_speed_benchmark(&cfg);
            emit_csv(&records, &out)?;
            println!("wrote {} records to {}", records.len(), out.display());
            if let Some(plot_path) = plot {
                plot::emit_scaling_plot(&records, &plot_path)?;
                println!("wrote scaling plot to {}", plot_path.display());
            }
            Ok(())
        }
        Command::Train { task, mechanism, chunk_size, seed, steps, out_dir } => {
            let mechanism = resolve_mechanism(mechanism, chunk_size)?;
            let task_spec = match task {
                TaskArg::Copy => TaskSpec::new(TaskKind::Copy, 5, 12, 16),
                TaskArg::PairSwap => TaskSpec::new(TaskKind::PairSwap, 6, 10, 16),
            }
            .with_samples(2048)
            .with_seed(seed);
            let config = ModelConfig { mechanism, seed, ..ModelConfig::default() };
            let opts = TrainOptions {
                steps,
                early_stop_accuracy: Some(0.995),
                snapshot_every: Some((steps / 8).max(1)),
                ..TrainOptions::default()
            };
            let outcome = train(&task_spec, &config, &opts)?;

            // Alignment snapshots: decode one held-out probe sequence with
            // the model as it was at each snapshot step, plus the final one.
            let probe = task_spec.with_samples(1).generate_salted(1).pairs[0].0.clone();
            let mut alignments = Vec::new();
            for (step, params) in &outcome.snapshots {
                let decoded = params.greedy_transduce(&probe, 2 * probe.len() + 5)?;
                alignments.push((*step, decoded.trace));
            }
            let last_step = outcome.curve.last().map_or(0, |r| r.step);
            if alignments.last().map(|(s, _)| *s) != Some(last_step) {
                let decoded = outcome.params.greedy_transduce(&probe, 2 * probe.len() + 5)?;
                alignments.push((last_step, decoded.trace));
            }

            let artifacts = save_run(
                &out_dir,
                &outcome.params,
                &task_spec,
                &opts,
                &outcome.curve,
                &alignments,
            )?;
            let eval = task_spec.with_samples(128).generate_salted(1);
            let tf = teacher_forced_accuracy(&outcome.params, &eval)?;
            let fr = free_running_exact_accuracy(&outcome.params, &eval)?;
            println!(
                "trained {} on {} for {} steps (early stop: {})",
                mechanism,
                task_spec.kind.name(),
                outcome.curve.len(),
                outcome.stopped_early
            );
            println!("teacher-forced token accuracy: {tf:.4}");
            println!("free-running exact-sequence accuracy: {fr:.4}");
            println!("run artifacts in {}", artifacts.dir.display());
            Ok(())
        }
        Command::Eval { model_dir, emit_alignments } => {
            let (params, task) = load_model(&model_dir)?;
            let eval = task.with_samples(128).generate_salted(1);
            let tf = teacher_forced_accuracy(&params, &eval)?;
            let fr = free_running_exact_accuracy(&params, &eval)?;
            println!("mechanism: {}", params.config.mechanism);
            println!("task: {}", task.kind.name());
            println!("teacher-forced token accuracy: {tf:.4}");
            println!("free-running exact-sequence accuracy: {fr:.4}");
            if emit_alignments {
                for (k, (input, _)) in eval.pairs.iter().take(4).enumerate() {
                    let decoded = params.greedy_transduce(input, 2 * input.len() + 5)?;
                    let path = model_dir.join("alignments").join(format!("eval_{k}.svg"));
                    plot::emit_alignment_plot(&decoded.trace, &path)?;
                    println!("wrote {}", path.display());
                }
            }
            Ok(())
        }
    }
}
