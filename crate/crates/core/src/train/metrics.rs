use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::RealArray;

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dims("metric operands", a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::invalid("metrics need at least one entry"));
    }
    Ok(())
}

/// Mean over all entries of the squared difference.
pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

/// `√⟨(a − b)²⟩`.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(mse(a, b)?.sqrt())
}

pub fn mse_arrays(a: &RealArray, b: &RealArray) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::invalid(format!("shape {:?} vs {:?}", a.shape(), b.shape())));
    }
    mse(a.data(), b.data())
}

/// Row-wise RMSE `(t_k, E_k)` with `t_k = t0 + (k+1)·h`: the error of the
/// `k`-th predicted row against the `k`-th true row.
pub fn rmse_series(pred: &RealArray, truth: &RealArray, t0: f64, h: f64) -> Result<Vec<(f64, f64)>> {
    if pred.shape() != truth.shape() {
        return Err(Error::invalid(format!(
            "shape {:?} vs {:?}",
            pred.shape(),
            truth.shape()
        )));
    }
    (0..pred.rows())
        .map(|k| Ok((t0 + (k + 1) as f64 * h, rmse(pred.row(k), truth.row(k))?)))
        .collect()
}

/// Valid prediction time: the largest `t_f` with `E(t) ≤ ε` for every
/// `t ≤ t_f`; zero when the first entry already exceeds `ε`.
pub fn vpt(series: &[(f64, f64)], eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("VPT threshold must be positive, got {eps}")));
    }
    if series.is_empty() {
        return Err(Error::invalid("VPT needs a non-empty error series"));
    }
    if series.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("VPT times must be strictly increasing"));
    }
    let mut valid = 0.0;
    for &(t, e) in series {
        // NaN errors count as exceedances.
        if !(e <= eps) {
            break;
        }
        valid = t;
    }
    Ok(valid)
}

/// Everything `eval` reports. Optional entries are absent when the data
/// to compute them is.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub train_mse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_one_step_mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rollout_mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rollout_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub midpoint_mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vpt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vpt_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rmse_series: Vec<(f64, f64)>,
    /// Per-trajectory breakdown when several test trajectories exist.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_trajectory: Vec<MetricReport>,
}

impl MetricReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
