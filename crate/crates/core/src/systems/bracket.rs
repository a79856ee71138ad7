use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::RealArray;

/// Finite-difference step for `∂b_ij/∂y_l`.
pub const BRACKET_FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    /// `max |b_ij + b_ji|`.
    pub skew: f64,
    /// `max |Σ_l b_il ∂_l b_jk + b_jl ∂_l b_ki + b_kl ∂_l b_ij|`.
    pub jacobi: f64,
    pub points: usize,
}

impl BracketReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.skew <= tol && self.jacobi <= tol
    }
}

/// Checks that `structure(y)` is skew-symmetric and satisfies the Jacobi
/// identity at each row of `points`.
pub fn check_poisson_bracket<B>(structure: B, points: &RealArray) -> Result<BracketReport>
where
    B: Fn(&[f64]) -> Result<RealArray>,
{
    let n = points.cols();
    let mut report = BracketReport {
        points: points.rows(),
        ..Default::default()
    };
    for r in 0..points.rows() {
        let y = points.row(r);
        let b = structure(y)?;
        if b.shape() != [n, n] {
            return Err(Error::dims("structure matrix", n * n, b.len()));
        }
        let b = b.data();
        for i in 0..n {
            for j in 0..n {
                report.skew = report.skew.max((b[i * n + j] + b[j * n + i]).abs());
            }
        }
        // db[l][i*n + j] = ∂b_ij / ∂y_l
        let mut db = Vec::with_capacity(n);
        let mut yp = y.to_vec();
        for l in 0..n {
            yp[l] = y[l] + BRACKET_FD_STEP;
            let bp = structure(&yp)?;
            yp[l] = y[l] - BRACKET_FD_STEP;
            let bm = structure(&yp)?;
            yp[l] = y[l];
            let d: Vec<f64> = bp
                .data()
                .iter()
                .zip(bm.data())
                .map(|(p, m)| (p - m) / (2.0 * BRACKET_FD_STEP))
                .collect();
            db.push(d);
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for (l, d) in db.iter().enumerate() {
                        s += b[i * n + l] * d[j * n + k] + b[j * n + l] * d[k * n + i] + b[k * n + l] * d[i * n + j];
                    }
                    report.jacobi = report.jacobi.max(s.abs());
                }
            }
        }
    }
    Ok(report)
}
