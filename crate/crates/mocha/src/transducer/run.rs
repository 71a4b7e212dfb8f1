//! Run-directory artifacts: a key=value config snapshot, the loss curve as
//! CSV, the serialized model, and alignment heatmaps.
//!
//! Layout:
//! ```text
//! <run-dir>/
//!   config.txt               key=value lines, sorted by key
//!   loss.csv                 step,loss,accuracy
//!   model.json               parameters + task, reloadable for eval
//!   alignments/step_<i>.svg  alignment snapshots during training
//! ```

use super::model::{AlignmentTrace, ModelParams};
use super::task::TaskSpec;
use super::train::{TrainOptions, TrainRecord, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, GRAD_CLIP};
use crate::error::{Error, Result};
use crate::plot;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(serde::Serialize, serde::Deserialize)]
struct SavedModel {
    params: ModelParams,
    task: TaskSpec,
}

pub struct RunArtifacts {
    pub dir: PathBuf,
    pub config_path: PathBuf,
    pub loss_path: PathBuf,
    pub model_path: PathBuf,
    pub alignment_paths: Vec<PathBuf>,
}

pub fn save_run(
    dir: &Path,
    params: &ModelParams,
    task: &TaskSpec,
    opts: &TrainOptions,
    curve: &[TrainRecord],
    alignments: &[(usize, AlignmentTrace)],
) -> Result<RunArtifacts> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;

    let config_path = dir.join("config.txt");
    write_text(&config_path, &config_text(params, task, opts))?;

    let loss_path = dir.join("loss.csv");
    let mut csv = String::from("step,loss,accuracy\n");
    for r in curve {
        csv.push_str(&format!("{},{},{}\n", r.step, r.loss, r.accuracy));
    }
    write_text(&loss_path, &csv)?;

    let model_path = dir.join("model.json");
    let saved = SavedModel { params: params.clone(), task: *task };
    let file = std::fs::File::create(&model_path)
        .map_err(|e| Error::io(format!("creating {}", model_path.display()), e))?;
    serde_json::to_writer(file, &saved)
        .map_err(|e| Error::Malformed { what: "model.json", detail: e.to_string() })?;

    let mut alignment_paths = Vec::new();
    for (step, trace) in alignments {
        let path = dir.join("alignments").join(format!("step_{step}.svg"));
        plot::emit_alignment_plot(trace, &path)?;
        alignment_paths.push(path);
    }

    Ok(RunArtifacts { dir: dir.to_path_buf(), config_path, loss_path, model_path, alignment_paths })
}

pub fn load_model(dir: &Path) -> Result<(ModelParams, TaskSpec)> {
    let path = dir.join("model.json");
    let file = std::fs::File::open(&path)
        .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let saved: SavedModel = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::Malformed { what: "model.json", detail: e.to_string() })?;
    Ok((saved.params, saved.task))
}

fn config_text(params: &ModelParams, task: &TaskSpec, opts: &TrainOptions) -> String {
    let c = &params.config;
    let mut entries = vec![
        ("batch".to_string(), opts.batch.to_string()),
        ("d_attn".to_string(), c.d_attn.to_string()),
        ("d_embed".to_string(), c.d_embed.to_string()),
        ("d_h".to_string(), c.d_h.to_string()),
        ("d_s".to_string(), c.d_s.to_string()),
        ("energy_offset".to_string(), c.energy_offset.to_string()),
        ("grad_clip".to_string(), GRAD_CLIP.to_string()),
        ("lr".to_string(), opts.lr.to_string()),
        (
            "early_stop_accuracy".to_string(),
            opts.early_stop_accuracy.map_or("none".to_string(), |a| a.to_string()),
        ),
        ("max_len".to_string(), task.max_len.to_string()),
        ("mechanism".to_string(), c.mechanism.name().to_string()),
        ("min_len".to_string(), task.min_len.to_string()),
        (
            "optimizer".to_string(),
            format!("adam(beta1={ADAM_BETA1},beta2={ADAM_BETA2},eps={ADAM_EPS})"),
        ),
        ("samples".to_string(), task.samples.to_string()),
        ("seed".to_string(), c.seed.to_string()),
        ("sigma".to_string(), c.sigma.to_string()),
        ("steps".to_string(), opts.steps.to_string()),
        ("task".to_string(), task.kind.name().to_string()),
        ("task_seed".to_string(), task.seed.to_string()),
        ("vocab".to_string(), c.vocab.to_string()),
        ("w".to_string(), c.mechanism.width_code().to_string()),
    ];
    entries.sort();
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(&format!("{k}={v}\n"));
    }
    out
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    file.write_all(content.as_bytes())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::super::task::TaskKind;
    use super::super::{Mechanism, ModelConfig};
    use super::*;

    #[test]
    fn run_dir_round_trips_the_model() {
        let dir = std::env::temp_dir().join(format!("mocha-run-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let config = ModelConfig::tiny(Mechanism::Mocha { width: 2 }, 9);
        let params = ModelParams::init(config);
        let task = TaskSpec::new(TaskKind::Copy, 3, 5, 8).with_samples(4);
        let opts = TrainOptions::default();
        let curve = vec![
            TrainRecord { step: 0, loss: 2.1, accuracy: 0.125 },
            TrainRecord { step: 1, loss: 1.9, accuracy: 0.25 },
        ];
        let trace = AlignmentTrace {
            mechanism: config.mechanism,
            memory_len: 3,
            rows: vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.5, 0.5]],
            stops: vec![Some(0), Some(2)],
        };
        let artifacts =
            save_run(&dir, &params, &task, &opts, &curve, &[(1, trace)]).unwrap();
        assert!(artifacts.config_path.exists());
        assert!(artifacts.loss_path.exists());
        assert!(artifacts.alignment_paths[0].ends_with("alignments/step_1.svg"));

        let config_body = std::fs::read_to_string(&artifacts.config_path).unwrap();
        assert!(config_body.contains("mechanism=mocha\n"));
        assert!(config_body.contains("w=2\n"));
        let loss_body = std::fs::read_to_string(&artifacts.loss_path).unwrap();
        assert!(loss_body.starts_with("step,loss,accuracy\n"));

        let (loaded, loaded_task) = load_model(&dir).unwrap();
        assert_eq!(loaded.embed.data(), params.embed.data());
        assert_eq!(loaded_task.kind, task.kind);
        let _ = std::fs::remove_dir_all(&dir);
    }
}
