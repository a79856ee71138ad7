use serde::{Deserialize, Serialize};

use super::array::RealArray;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid_scalar(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output `y = eval(x)`.
    #[inline]
    pub fn deriv_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn apply(self, x: &RealArray) -> RealArray {
        x.map(|v| self.eval(v))
    }
}

/// Logistic function, evaluated without overflow for either sign.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &RealArray) -> RealArray {
    x.map(sigmoid_scalar)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_reference_points() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        assert!((sigmoid_scalar(3f64.ln()) - 0.75).abs() < 1e-15);
        let big = sigmoid_scalar(40.0);
        assert!(big > 0.0 && big <= 1.0);
        let tiny = sigmoid_scalar(-800.0);
        assert!(tiny >= 0.0 && tiny.is_finite());
    }

    #[test]
    fn sigmoid_preserves_shape() {
        let x = RealArray::matrix(2, 2, vec![0.0, 1.0, -1.0, 40.0]);
        let y = sigmoid(&x);
        assert_eq!(y.shape(), &[2, 2]);
        assert_eq!(y.data()[0], 0.5);
    }

    #[test]
    fn derivative_from_output() {
        for act in [Activation::Sigmoid, Activation::Tanh] {
            for &x in &[-2.0, -0.3, 0.0, 0.7, 3.0] {
                let h = 1e-6;
                let fd = (act.eval(x + h) - act.eval(x - h)) / (2.0 * h);
                assert!((fd - act.deriv_from_output(act.eval(x))).abs() < 1e-9);
            }
        }
    }
}
