//! The contract every trainable map obeys, plus central-difference oracles
//! used to check it.

use super::array::RealArray;
use super::param::ParamSet;
use super::rng::SeededRng;
use crate::error::{Error, Result};

/// A parameterized map with an exact vector-Jacobian product.
///
/// `backward` recomputes whatever intermediates it needs from `x`, returns
/// the input cotangent, and adds parameter gradients into the `grad`
/// buffers. Gradients keep accumulating until `zero_grad`.
pub trait DifferentiableLayer {
    fn forward(&self, x: &RealArray) -> Result<RealArray>;

    fn backward(&mut self, x: &RealArray, cotangent: &RealArray) -> Result<RealArray>;

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet));

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet));

    fn zero_grad(&mut self) {
        self.visit_params_mut(&mut |p| p.zero_grad());
    }
}

pub fn param_count<L: DifferentiableLayer + ?Sized>(layer: &L) -> usize {
    let mut n = 0;
    layer.visit_params(&mut |ps| n += ps.iter().map(|(_, p)| p.value.len()).sum::<usize>());
    n
}

/// All parameter values, flattened in visit order.
pub fn flat_params<L: DifferentiableLayer + ?Sized>(layer: &L) -> Vec<f64> {
    let mut out = Vec::new();
    layer.visit_params(&mut |ps| {
        for (_, p) in ps.iter() {
            out.extend_from_slice(p.value.data());
        }
    });
    out
}

pub fn flat_grads<L: DifferentiableLayer + ?Sized>(layer: &L) -> Vec<f64> {
    let mut out = Vec::new();
    layer.visit_params(&mut |ps| {
        for (_, p) in ps.iter() {
            out.extend_from_slice(p.grad.data());
        }
    });
    out
}

pub fn set_flat_params<L: DifferentiableLayer + ?Sized>(layer: &mut L, values: &[f64]) {
    let mut offset = 0;
    layer.visit_params_mut(&mut |ps| {
        for (_, p) in ps.iter_mut() {
            let n = p.value.len();
            p.value.data_mut().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
    });
    assert_eq!(offset, values.len(), "flat parameter length");
}

/// Overwrites every parameter with draws from `U(-scale, scale)`.
pub fn randomize_params<L: DifferentiableLayer + ?Sized>(layer: &mut L, rng: &mut SeededRng, scale: f64) {
    let n = param_count(layer);
    let values: Vec<f64> = (0..n).map(|_| rng.uniform_in(-scale, scale)).collect();
    set_flat_params(layer, &values);
}

/// Five-point finite-difference Jacobian of a layer at a single point.
pub fn layer_jacobian<L: DifferentiableLayer + ?Sized>(layer: &L, x: &[f64], step: f64) -> Result<RealArray> {
    jacobian_fd5(x, step, |p| {
        Ok(layer.forward(&RealArray::vector(p.to_vec()))?.into_data())
    })
}

/// Central-difference gradient of a scalar function.
pub fn central_diff_grad(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Vec<f64>> {
    check_step(step)?;
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let up = f(&probe)?;
        probe[i] = orig - step;
        let down = f(&probe)?;
        probe[i] = orig;
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

/// Central-difference Jacobian `[outputs, inputs]` of a vector function.
pub fn jacobian_fd(x: &[f64], step: f64, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<RealArray> {
    check_step(step)?;
    let n = x.len();
    let mut probe = x.to_vec();
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let orig = probe[i];
        probe[i] = orig + step;
        let up = f(&probe)?;
        probe[i] = orig - step;
        let down = f(&probe)?;
        probe[i] = orig;
        columns.push(
            up.iter()
                .zip(&down)
                .map(|(u, d)| (u - d) / (2.0 * step))
                .collect::<Vec<_>>(),
        );
    }
    let m = columns.first().map_or(0, Vec::len);
    let mut data = vec![0.0; m * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * n + j] = *v;
        }
    }
    Ok(RealArray::matrix(m, n, data))
}

/// Five-point (fourth-order) central-difference Jacobian `[outputs, inputs]`.
pub fn jacobian_fd5(x: &[f64], step: f64, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<RealArray> {
    check_step(step)?;
    let n = x.len();
    let mut probe = x.to_vec();
    let mut eval_at = |i: usize, offset: f64| -> Result<Vec<f64>> {
        let orig = probe[i];
        probe[i] = orig + offset;
        let out = f(&probe);
        probe[i] = orig;
        out
    };
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let p2 = eval_at(i, 2.0 * step)?;
        let p1 = eval_at(i, step)?;
        let m1 = eval_at(i, -step)?;
        let m2 = eval_at(i, -2.0 * step)?;
        columns.push(
            (0..p1.len())
                .map(|k| (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * step))
                .collect::<Vec<_>>(),
        );
    }
    let m = columns.first().map_or(0, Vec::len);
    let mut data = vec![0.0; m * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * n + j] = *v;
        }
    }
    Ok(RealArray::matrix(m, n, data))
}

/// Finite-difference estimate of a layer's vector-Jacobian product.
#[derive(Clone, Debug)]
pub struct VjpEstimate {
    pub input: RealArray,
    /// Parameter gradients flattened in visit order.
    pub params: Vec<f64>,
}

pub fn finite_diff_vjp<L: DifferentiableLayer + ?Sized>(
    layer: &mut L,
    input: &RealArray,
    cotangent: &RealArray,
    step: f64,
) -> Result<VjpEstimate> {
    check_step(step)?;
    let dot = |y: &RealArray| -> Result<f64> {
        y.check_same(cotangent, "finite_diff_vjp")?;
        Ok(y.data().iter().zip(cotangent.data()).map(|(a, b)| a * b).sum())
    };

    let input_grad = {
        let layer_ref: &L = layer;
        central_diff_grad(input.data(), step, |xs| {
            let x = RealArray::new(input.shape().to_vec(), xs.to_vec())?;
            dot(&layer_ref.forward(&x)?)
        })?
    };

    let theta = flat_params(layer);
    let params = central_diff_grad(&theta, step, |ps| {
        set_flat_params(layer, ps);
        dot(&layer.forward(input)?)
    })?;
    set_flat_params(layer, &theta);

    Ok(VjpEstimate {
        input: RealArray::new(input.shape().to_vec(), input_grad)?,
        params,
    })
}

/// `max|a - b| / max(1, max|b|)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / scale
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "finite-difference step must be > 0, got {step}"
        )))
    }
}
