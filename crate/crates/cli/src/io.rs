//! On-disk formats: trajectory CSV, PGM frame sets with an index, the
//! dataset manifest and the loss curve.

use std::path::{Path, PathBuf};

use pnn_core::numcore::RealArray;
use pnn_core::pnn::FlowDataset;
use pnn_core::systems::{read_pgm, IntegratorConfig, PixelMovie, RenderConfig, SystemSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serialisable");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// `t,y1..yn` with one row per state, `t = t0 + k·dt`. Floats use the
/// shortest round-trip representation, so files are bit-exact.
pub fn write_trajectory_csv(path: &Path, t0: f64, dt: f64, states: &RealArray) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=states.cols()).map(|i| format!("y{i}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for k in 0..states.rows() {
        let mut rec = vec![(t0 + k as f64 * dt).to_string()];
        rec.extend(states.row(k).iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Inverse of [`write_trajectory_csv`]: `(times, states)`.
pub fn read_trajectory_csv(path: &Path) -> CliResult<(Vec<f64>, RealArray)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let cols = r.headers().map_err(csv_err(path))?.len();
    if cols < 2 {
        return Err(CliError::config(format!(
            "{}: expected columns t,y1..yn",
            path.display()
        )));
    }
    let mut times = Vec::new();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let mut vals = rec.iter().map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("{}: `{s}` is not a number", path.display())))
        });
        times.push(vals.next().expect("t column")?);
        for v in vals {
            data.push(v?);
        }
    }
    let n = cols - 1;
    Ok((times.clone(), RealArray::matrix(times.len(), n, data)))
}

/// Loss curve `iter,loss`.
pub fn write_loss_csv(path: &Path, history: &[(usize, f64)]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["iter", "loss"]).map_err(csv_err(path))?;
    for (it, loss) in history {
        w.write_record([it.to_string(), loss.to_string()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Index of a PGM frame set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameIndex {
    pub width: usize,
    pub height: usize,
    pub dt: f64,
    pub frames: Vec<String>,
}

/// Writes `movie` into `dir` plus `dir/index.json`.
pub fn write_frames(dir: &Path, movie: &PixelMovie, dt: f64) -> CliResult<PathBuf> {
    let names = movie.write_pgm_frames(dir)?;
    let index = FrameIndex {
        width: movie.width,
        height: movie.height,
        dt,
        frames: names.iter().map(|n| n.display().to_string()).collect(),
    };
    let path = dir.join("index.json");
    write_json(&path, &index)?;
    Ok(path)
}

/// Loads every frame listed by an index file as rows.
pub fn read_frames(index_path: &Path) -> CliResult<(FrameIndex, RealArray)> {
    let index: FrameIndex = read_json(index_path)?;
    let dir = index_path.parent().unwrap_or(Path::new("."));
    let mut data = Vec::with_capacity(index.frames.len() * index.width * index.height);
    for name in &index.frames {
        let (w, h, px) = read_pgm(&dir.join(name))?;
        if (w, h) != (index.width, index.height) {
            return Err(CliError::config(format!(
                "frame {name} is {w}×{h}, index says {}×{}",
                index.width, index.height
            )));
        }
        data.extend(px);
    }
    let rows = index.frames.len();
    Ok((index.clone(), RealArray::matrix(rows, index.width * index.height, data)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    /// State CSV, relative to the dataset directory.
    pub states: String,
    /// Frame index, for rendered data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<String>,
    /// Stored rows, `(train_steps + test_steps)·refine + 1`.
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub system: SystemSpec,
    pub h: f64,
    pub refine: usize,
    pub train_steps: usize,
    pub test_steps: usize,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub render: Option<RenderConfig>,
    pub trajectories: Vec<TrajectoryEntry>,
    /// Seconds since the Unix epoch; the only non-deterministic field.
    pub created_unix: u64,
}

/// A generated dataset in memory. Observations are frames for rendered
/// data and states otherwise, stored at spacing `h / refine`.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: Manifest,
    pub observations: Vec<RealArray>,
}

fn rows(a: &RealArray, start: usize, end: usize, stride: usize) -> RealArray {
    let n = a.cols();
    let mut data = Vec::new();
    let mut count = 0;
    for k in (start..=end).step_by(stride) {
        data.extend_from_slice(a.row(k));
        count += 1;
    }
    RealArray::matrix(count, n, data)
}

impl Dataset {
    pub fn load(dir: &Path) -> CliResult<Self> {
        let manifest: Manifest = read_json(&dir.join(MANIFEST))?;
        let expected = (manifest.train_steps + manifest.test_steps) * manifest.refine + 1;
        let mut observations = Vec::new();
        for t in &manifest.trajectories {
            let obs = match &t.frames {
                Some(index) => read_frames(&dir.join(index))?.1,
                None => read_trajectory_csv(&dir.join(&t.states))?.1,
            };
            if obs.rows() != expected || t.rows != expected {
                return Err(CliError::config(format!(
                    "{}: expected {expected} rows, found {}",
                    t.states,
                    obs.rows()
                )));
            }
            observations.push(obs);
        }
        if observations.is_empty() {
            return Err(CliError::config(format!(
                "{}: manifest lists no trajectories",
                dir.display()
            )));
        }
        Ok(Dataset { manifest, observations })
    }

    pub fn dim(&self) -> usize {
        self.observations[0].cols()
    }

    fn split(&self) -> usize {
        self.manifest.train_steps * self.manifest.refine
    }

    /// Training observations of trajectory `i` on the coarse grid.
    pub fn train_rows(&self, i: usize) -> RealArray {
        rows(&self.observations[i], 0, self.split(), self.manifest.refine)
    }

    /// Test observations of trajectory `i` on the coarse grid, starting at
    /// the last training state.
    pub fn test_rows(&self, i: usize) -> Option<RealArray> {
        let obs = &self.observations[i];
        (self.manifest.test_steps > 0).then(|| rows(obs, self.split(), obs.rows() - 1, self.manifest.refine))
    }

    /// Test observations at the fine spacing `h / refine`.
    pub fn fine_test_rows(&self, i: usize) -> Option<RealArray> {
        let obs = &self.observations[i];
        (self.manifest.test_steps > 0).then(|| rows(obs, self.split(), obs.rows() - 1, 1))
    }

    pub fn flow_dataset(&self) -> CliResult<FlowDataset> {
        let trajs: Vec<RealArray> = (0..self.observations.len()).map(|i| self.train_rows(i)).collect();
        Ok(FlowDataset::from_trajectories(&trajs, self.manifest.h)?)
    }
}
