//! Adam, the full-batch training loop and evaluation metrics.

mod adam;
mod metrics;

pub use adam::{Adam, AdamConfig};
pub use metrics::{mse, mse_arrays, rmse, rmse_series, vpt, MetricReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{DifferentiableLayer, RealArray};
use crate::pnn::{FlowDataset, FlowModel, LossKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    /// Seeds parameter initialisation; the loop itself is deterministic.
    pub seed: u64,
    /// Defaults to the model's natural objective.
    pub loss: Option<LossKind>,
    pub log_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            iterations: 10_000,
            seed: 0,
            loss: None,
            log_interval: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.log_interval == 0 {
            return Err(Error::invalid("log interval must be at least 1"));
        }
        if let Some(LossKind::Alternative { lambda }) = self.loss {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(Error::invalid("λ must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// `(iteration, loss)`; the loss is measured before that iteration's
    /// update, and the last entry is the loss after the final update.
    pub history: Vec<(usize, f64)>,
    pub final_loss: f64,
}

fn at_iteration(e: Error, it: usize) -> Error {
    match e {
        Error::NonFinite(msg) => Error::NonFinite(format!("{msg} at iteration {it}")),
        other => other,
    }
}

/// Runs `cfg.iterations` full-batch loss/gradient/Adam cycles. `on_log`
/// sees every logged `(iteration, loss)`.
pub fn train(
    model: &mut FlowModel,
    data: &FlowDataset,
    cfg: &TrainConfig,
    mut on_log: impl FnMut(usize, f64),
) -> Result<TrainLog> {
    cfg.validate()?;
    let kind = cfg.loss.unwrap_or_else(|| model.default_loss());
    let mut adam = Adam::new(AdamConfig {
        lr: cfg.learning_rate,
        ..Default::default()
    })?;
    let mut log = TrainLog::default();
    model.zero_grad();
    for it in 0..cfg.iterations {
        let loss = model.loss_and_grad(data, kind).map_err(|e| at_iteration(e, it))?;
        if it % cfg.log_interval == 0 {
            log.history.push((it, loss));
            on_log(it, loss);
        }
        adam.step(model).map_err(|e| at_iteration(e, it))?;
    }
    let last = model.loss(data, kind).map_err(|e| at_iteration(e, cfg.iterations))?;
    log.history.push((cfg.iterations, last));
    on_log(cfg.iterations, last);
    log.final_loss = last;
    Ok(log)
}

/// One-step MSE of the model over all pairs of `data`.
pub fn one_step_mse(model: &FlowModel, data: &FlowDataset) -> Result<f64> {
    mse_arrays(&model.forward(&data.x())?, &data.y())
}

/// Rolls out from the first row of `truth` and compares against the
/// remaining rows; returns the stacked prediction.
pub fn rollout(model: &FlowModel, truth: &RealArray) -> Result<RealArray> {
    if truth.rows() < 2 {
        return Err(Error::invalid("a rollout reference needs at least two states"));
    }
    let x0 = RealArray::matrix(1, truth.cols(), truth.row(0).to_vec());
    let steps = model.predict(&x0, truth.rows() - 1, false)?;
    let data: Vec<f64> = steps.iter().flat_map(|s| s.data().iter().copied()).collect();
    Ok(RealArray::matrix(steps.len(), truth.cols(), data))
}

fn tail(truth: &RealArray) -> RealArray {
    let n = truth.cols();
    RealArray::matrix(truth.rows() - 1, n, truth.data()[n..].to_vec())
}

/// Training MSE plus, when a test trajectory is given (its first row being
/// the end of the training data), one-step and rollout test MSE and the
/// valid prediction time at threshold `eps`.
pub fn evaluate(model: &FlowModel, train: &FlowDataset, test: Option<&RealArray>, eps: f64) -> Result<MetricReport> {
    let mut report = MetricReport {
        train_mse: one_step_mse(model, train)?,
        ..Default::default()
    };
    if let Some(truth) = test {
        let h = train.h();
        let pairs = FlowDataset::from_trajectories(std::slice::from_ref(truth), h)?;
        report.test_one_step_mse = Some(one_step_mse(model, &pairs)?);
        let pred = rollout(model, truth)?;
        let reference = tail(truth);
        report.rollout_mse = Some(mse_arrays(&pred, &reference)?);
        report.rollout_steps = Some(pred.rows());
        let series = rmse_series(&pred, &reference, 0.0, h)?;
        report.vpt = Some(vpt(&series, eps)?);
        report.vpt_eps = Some(eps);
        report.rmse_series = series;
    }
    Ok(report)
}

/// Grid and between-grid MSE of a latent-substep rollout. `fine` holds the
/// true states at spacing `h/m` starting from the rollout's initial state;
/// latent step `j` is compared with `fine[j]`, and counts as a grid
/// frame when `m` divides `j`.
pub fn interpolation_mse(model: &FlowModel, fine: &RealArray) -> Result<(f64, f64)> {
    let m = model.recurrence();
    if m < 2 {
        return Err(Error::invalid("interpolation needs a recurrence m ≥ 2"));
    }
    let latent_steps = fine.rows().saturating_sub(1);
    if latent_steps < m || !latent_steps.is_multiple_of(m) {
        return Err(Error::invalid(format!(
            "fine reference must cover a whole number of observed steps (got {latent_steps} substeps, m = {m})"
        )));
    }
    let x0 = RealArray::matrix(1, fine.cols(), fine.row(0).to_vec());
    let states = model.predict(&x0, latent_steps / m, true)?;
    let (mut grid, mut mid) = (Vec::new(), Vec::new());
    for (i, s) in states.iter().enumerate() {
        let j = i + 1;
        let err = mse(s.data(), fine.row(j))?;
        if j % m == 0 {
            grid.push(err)
        } else {
            mid.push(err)
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok((mean(&grid), mean(&mid)))
}
