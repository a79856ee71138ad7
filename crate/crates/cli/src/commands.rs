use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use pnn_core::numcore::{seeded_rng, RealArray};
use pnn_core::pnn::{Checkpoint, FlowDataset, FlowModel};
use pnn_core::systems::{generate_trajectory, render_two_body, PixelMovie};
use pnn_core::train::{self, evaluate, interpolation_mse, MetricReport, TrainLog};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, Dataset, Manifest, TrajectoryEntry, MANIFEST};

pub const CHECKPOINT: &str = "checkpoint.json";
pub const METRICS: &str = "metrics.json";
pub const LOSS_CURVE: &str = "loss.csv";

/// Integrates every trajectory of `cfg`, writes the CSV files (and PGM
/// frames for rendered data) and the manifest into `out`.
pub fn gen(cfg: &ExperimentConfig, out: &Path) -> CliResult<Dataset> {
    cfg.validate()?;
    io::create_dir(out)?;
    let d = &cfg.data;
    let dt = d.h / d.refine as f64;
    let steps = (d.train_steps + d.test_steps) * d.refine;
    let mut entries = Vec::new();
    let mut observations = Vec::new();
    for (i, y0) in cfg.initial_states()?.iter().enumerate() {
        let traj = generate_trajectory(&cfg.system, y0, dt, steps, &d.integrator)?;
        let states = format!("traj_{i}.csv");
        io::write_trajectory_csv(&out.join(&states), 0.0, dt, &traj)?;
        let frames = match &d.render {
            Some(r) => {
                let movie = render_two_body(&traj, r)?;
                let dir = format!("frames_{i}");
                io::write_frames(&out.join(&dir), &movie, dt)?;
                observations.push(movie.frames);
                Some(format!("{dir}/index.json"))
            }
            None => {
                observations.push(traj.clone());
                None
            }
        };
        entries.push(TrajectoryEntry {
            states,
            frames,
            rows: traj.rows(),
        });
    }
    let manifest = Manifest {
        name: cfg.name.clone(),
        system: cfg.system,
        h: d.h,
        refine: d.refine,
        train_steps: d.train_steps,
        test_steps: d.test_steps,
        seed: cfg.train.seed,
        integrator: d.integrator,
        render: d.render,
        trajectories: entries,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    io::write_json(&out.join(MANIFEST), &manifest)?;
    // Reload so in-memory frames carry the same 8-bit quantisation as disk.
    if d.render.is_some() {
        return Dataset::load(out);
    }
    Ok(Dataset { manifest, observations })
}

/// Training MSE over all trajectories; one-step and rollout test MSE and
/// VPT per trajectory (aggregated by mean, mean and minimum); grid and
/// midpoint MSE when the data carry `m`-fold refined ground truth.
pub fn evaluate_dataset(model: &FlowModel, data: &Dataset, eps: f64) -> CliResult<MetricReport> {
    if data.dim() != model.dim() {
        return Err(pnn_core::Error::DimensionMismatch {
            context: "model vs dataset",
            expected: model.dim(),
            got: data.dim(),
        }
        .into());
    }
    let all = data.flow_dataset()?;
    let mut per = Vec::new();
    for i in 0..data.observations.len() {
        let train_i = FlowDataset::from_trajectories(&[data.train_rows(i)], data.manifest.h)?;
        per.push(evaluate(model, &train_i, data.test_rows(i).as_ref(), eps)?);
    }
    let mut report = if per.len() == 1 {
        per.pop().expect("one report")
    } else {
        let mean = |f: &dyn Fn(&MetricReport) -> Option<f64>| -> Option<f64> {
            let v: Option<Vec<f64>> = per.iter().map(f).collect();
            v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        MetricReport {
            test_one_step_mse: mean(&|r| r.test_one_step_mse),
            rollout_mse: mean(&|r| r.rollout_mse),
            rollout_steps: per[0].rollout_steps,
            vpt: per
                .iter()
                .map(|r| r.vpt)
                .collect::<Option<Vec<_>>>()
                .map(|v| v.into_iter().fold(f64::INFINITY, f64::min)),
            vpt_eps: per[0].vpt_eps,
            per_trajectory: per,
            ..Default::default()
        }
    };
    report.train_mse = train::one_step_mse(model, &all)?;
    let m = model.recurrence();
    if m >= 2 && data.manifest.refine == m {
        if let Some(fine) = data.fine_test_rows(0) {
            let (grid, mid) = interpolation_mse(model, &fine)?;
            report.grid_mse = Some(grid);
            report.midpoint_mse = Some(mid);
        }
    }
    Ok(report)
}

pub struct TrainOutcome {
    pub model: FlowModel,
    pub log: TrainLog,
    pub report: MetricReport,
    pub checkpoint: PathBuf,
}

/// Builds the model from the config seed, trains it on `data` and writes
/// checkpoint, metrics and loss curve into `out`.
pub fn train(cfg: &ExperimentConfig, data: &Dataset, out: &Path, quiet: bool) -> CliResult<TrainOutcome> {
    cfg.validate()?;
    if data.dim() != cfg.observation_dim() {
        return Err(CliError::config(format!(
            "dataset observations are {}-dimensional, config expects {}",
            data.dim(),
            cfg.observation_dim()
        )));
    }
    io::create_dir(out)?;
    let mut model = cfg.model.build(data.dim(), &mut seeded_rng(cfg.train.seed))?;
    let flow = data.flow_dataset()?;
    let total = cfg.train.iterations;
    let log = train::train(&mut model, &flow, &cfg.train, |it, loss| {
        if !quiet {
            eprintln!("[{}] iter {it:>8}/{total}  loss {loss:.6e}", cfg.name);
        }
    })?;
    let report = evaluate_dataset(&model, data, cfg.eval.eps)?;
    let metadata = json!({
        "name": cfg.name,
        "h": data.manifest.h,
        "system": cfg.system,
        "render": data.manifest.render,
        "train": cfg.train,
        "final_loss": log.final_loss,
    });
    let checkpoint = out.join(CHECKPOINT);
    model.to_checkpoint(metadata).save(&checkpoint)?;
    report.save(&out.join(METRICS))?;
    io::write_loss_csv(&out.join(LOSS_CURVE), &log.history)?;
    Ok(TrainOutcome {
        model,
        log,
        report,
        checkpoint,
    })
}

pub fn load_checkpoint(path: &Path) -> CliResult<(FlowModel, Checkpoint)> {
    if !path.exists() {
        return Err(CliError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "checkpoint not found"),
        ));
    }
    let ck = Checkpoint::load(path)?;
    Ok((FlowModel::from_checkpoint(&ck)?, ck))
}

/// Where a rollout starts.
pub enum Start {
    State(Vec<f64>),
    /// End of the training part of trajectory `traj` in a dataset.
    DatasetEnd {
        data: PathBuf,
        traj: usize,
    },
}

pub struct Rollout {
    pub dt: f64,
    pub t0: f64,
    /// Initial state followed by the predictions.
    pub states: RealArray,
}

/// `k` observed steps (or every latent substep) from `start`; written as a
/// trajectory CSV to `out`, or as PGM frames into `out/` for rendered data.
pub fn predict(checkpoint: &Path, start: Start, k: usize, emit_substeps: bool, out: &Path) -> CliResult<Rollout> {
    let (model, ck) = load_checkpoint(checkpoint)?;
    if k == 0 {
        return Err(CliError::config("prediction length must be at least 1"));
    }
    let mut h = ck.metadata.get("h").and_then(|v| v.as_f64()).unwrap_or(1.0);
    let (x0, t0, frames) = match start {
        Start::State(x) => (x, 0.0, None),
        Start::DatasetEnd { data, traj } => {
            let ds = Dataset::load(&data)?;
            if traj >= ds.observations.len() {
                return Err(CliError::config(format!("dataset has no trajectory {traj}")));
            }
            h = ds.manifest.h;
            let rows = ds.train_rows(traj);
            let frames = ds.manifest.render.map(|r| (r.width, r.height));
            (
                rows.row(rows.rows() - 1).to_vec(),
                ds.manifest.train_steps as f64 * h,
                frames,
            )
        }
    };
    if x0.len() != model.dim() {
        return Err(CliError::config(format!(
            "initial state has {} entries, model expects {}",
            x0.len(),
            model.dim()
        )));
    }
    let preds = model.predict(&RealArray::matrix(1, x0.len(), x0.clone()), k, emit_substeps)?;
    let dt = if emit_substeps {
        h / model.recurrence() as f64
    } else {
        h
    };
    let mut data = x0;
    for p in &preds {
        data.extend_from_slice(p.data());
    }
    let states = RealArray::matrix(preds.len() + 1, model.dim(), data);
    match frames {
        Some((width, height)) => {
            let movie = PixelMovie {
                width,
                height,
                frames: states.map(|v| v.clamp(0.0, 1.0)),
            };
            io::write_frames(out, &movie, dt)?;
        }
        None => {
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                io::create_dir(parent)?;
            }
            io::write_trajectory_csv(out, t0, dt, &states)?;
        }
    }
    Ok(Rollout { dt, t0, states })
}

/// Metrics of each checkpoint against the dataset.
pub fn eval(checkpoints: &[PathBuf], data: &Path, eps: f64) -> CliResult<Vec<(String, MetricReport)>> {
    if !(eps > 0.0) {
        return Err(CliError::config("eps must be positive"));
    }
    let ds = Dataset::load(data)?;
    checkpoints
        .iter()
        .map(|path| {
            let (model, ck) = load_checkpoint(path)?;
            let name = ck
                .metadata
                .get("name")
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .unwrap_or_else(|| path.display().to_string());
            Ok((name, evaluate_dataset(&model, &ds, eps)?))
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"))
}

/// Plain-text comparison table, one row per model.
pub fn format_table(rows: &[(String, MetricReport)]) -> String {
    let mut s = format!(
        "{:<16} {:>11} {:>11} {:>11} {:>11} {:>11} {:>9}\n",
        "model", "train MSE", "test 1-step", "rollout", "grid", "middle", "VPT"
    );
    for (name, r) in rows {
        s += &format!(
            "{:<16} {:>11} {:>11} {:>11} {:>11} {:>11} {:>9}\n",
            name,
            format!("{:.3e}", r.train_mse),
            opt(r.test_one_step_mse),
            opt(r.rollout_mse),
            opt(r.grid_mse),
            opt(r.midpoint_mse),
            r.vpt.map_or_else(|| "-".to_string(), |v| format!("{v:.2}")),
        );
    }
    s
}
