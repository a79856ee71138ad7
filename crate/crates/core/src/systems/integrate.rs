use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::spec::SystemSpec;
use crate::error::{Error, Result};
use crate::numcore::RealArray;

/// Implicit-midpoint based schemes. `TripleJump` composes three midpoint
/// steps into a symmetric fourth-order method; both are symplectic and
/// conserve quadratic invariants exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Midpoint,
    #[default]
    TripleJump,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Midpoint => 2,
            Scheme::TripleJump => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Internal steps per output step.
    pub substeps: usize,
    /// Stage-solve tolerance, relative to `1 + ‖Y‖∞`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            scheme: Scheme::TripleJump,
            substeps: 10,
            tol: 1e-13,
            max_iter: 60,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 || self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::invalid("integrator needs substeps, max_iter and tol positive"));
        }
        Ok(())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn jacobian<F>(f: &F, y: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = y.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    for j in 0..n {
        let h = 1e-6 * (1.0 + y[j].abs());
        yp[j] = y[j] + h;
        let fp = f(&yp)?;
        yp[j] = y[j] - h;
        let fm = f(&yp)?;
        yp[j] = y[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// One implicit-midpoint step `y₁ = y₀ + h f((y₀+y₁)/2)`.
///
/// The midpoint `Y = y₀ + (h/2) f(Y)` is found by simplified Newton
/// iteration with a finite-difference Jacobian frozen at the predictor.
/// `step` is only used to label a failure.
pub fn midpoint_step<F>(f: &F, y: &[f64], h: f64, cfg: &IntegratorConfig, step: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = y.len();
    let f0 = f(y)?;
    let mut stage: Vec<f64> = y.iter().zip(&f0).map(|(a, b)| a + 0.5 * h * b).collect();
    let mut lhs = jacobian(f, &stage)?;
    lhs *= -0.5 * h;
    for i in 0..n {
        lhs[(i, i)] += 1.0;
    }
    let lu = lhs.lu();
    let mut last = f64::INFINITY;
    for _ in 0..cfg.max_iter {
        let fy = f(&stage)?;
        let r = DVector::from_iterator(n, (0..n).map(|i| y[i] + 0.5 * h * fy[i] - stage[i]));
        let delta = lu.solve(&r).ok_or(Error::SolverDiverged {
            step,
            residual: f64::NAN,
        })?;
        for (s, d) in stage.iter_mut().zip(delta.iter()) {
            *s += d;
        }
        let size = delta.amax();
        let scale = 1.0 + max_abs(&stage);
        if !size.is_finite() {
            break;
        }
        if size <= cfg.tol * scale || (size <= 1e3 * cfg.tol * scale && size >= 0.5 * last) {
            // Converged, or stalled at the rounding floor.
            return Ok(stage.iter().zip(y).map(|(s, a)| 2.0 * s - a).collect());
        }
        last = size;
    }
    Err(Error::SolverDiverged { step, residual: last })
}

const TJ_ROOT: f64 = 1.259_921_049_894_873_2; // 2^(1/3)

/// One output step of size `h`, made of `cfg.substeps` scheme steps.
pub fn step<F>(f: &F, y: &[f64], h: f64, cfg: &IntegratorConfig, index: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let dt = h / cfg.substeps as f64;
    let mut y = y.to_vec();
    for _ in 0..cfg.substeps {
        y = match cfg.scheme {
            Scheme::Midpoint => midpoint_step(f, &y, dt, cfg, index)?,
            Scheme::TripleJump => {
                let g1 = 1.0 / (2.0 - TJ_ROOT);
                let g2 = -TJ_ROOT * g1;
                let a = midpoint_step(f, &y, g1 * dt, cfg, index)?;
                let b = midpoint_step(f, &a, g2 * dt, cfg, index)?;
                midpoint_step(f, &b, g1 * dt, cfg, index)?
            }
        };
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("integrator state at step {index}")));
    }
    Ok(y)
}

/// `steps + 1` states `y(0), y(h), …` as rows.
pub fn integrate<F>(f: &F, y0: &[f64], h: f64, steps: usize, cfg: &IntegratorConfig) -> Result<RealArray>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("step size must be positive"));
    }
    let n = y0.len();
    let mut out = Vec::with_capacity((steps + 1) * n);
    out.extend_from_slice(y0);
    let mut y = y0.to_vec();
    for k in 1..=steps {
        y = step(f, &y, h, cfg, k)?;
        out.extend_from_slice(&y);
    }
    Ok(RealArray::matrix(steps + 1, n, out))
}

/// Trajectory of `system` from `y0`, integrated in canonical coordinates
/// and mapped back to the original ones.
pub fn generate_trajectory(
    system: &SystemSpec,
    y0: &[f64],
    h: f64,
    steps: usize,
    cfg: &IntegratorConfig,
) -> Result<RealArray> {
    system.validate()?;
    let z0 = system.to_canonical(y0)?;
    let field = |z: &[f64]| system.canonical_field(z);
    let zs = integrate(&field, &z0, h, steps, cfg)?;
    let mut out = Vec::with_capacity(zs.len());
    for k in 0..zs.rows() {
        out.extend(system.from_canonical(zs.row(k))?);
    }
    Ok(RealArray::matrix(zs.rows(), zs.cols(), out))
}

/// Same trajectory integrated directly in the original coordinates.
pub fn generate_trajectory_direct(
    system: &SystemSpec,
    y0: &[f64],
    h: f64,
    steps: usize,
    cfg: &IntegratorConfig,
) -> Result<RealArray> {
    system.validate()?;
    system.check_domain(y0)?;
    integrate(&|y: &[f64]| system.field(y), y0, h, steps, cfg)
}

/// Classical RK4 with `steps` steps of size `h`; final state only. Used as
/// an independent reference.
pub fn rk4<F>(f: &F, y0: &[f64], h: f64, steps: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    let mut y = y0.to_vec();
    for _ in 0..steps {
        let k1 = f(&y)?;
        let k2 = f(&add(&y, &k1, h / 2.0))?;
        let k3 = f(&add(&y, &k2, h / 2.0))?;
        let k4 = f(&add(&y, &k3, h))?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(y)
}
