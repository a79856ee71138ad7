use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::DifferentiableLayer;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam over every parameter a layer exposes. Moment
/// buffers follow the layer's visiting order, so one optimizer belongs to
/// one model.
#[derive(Clone, Debug)]
pub struct Adam {
    cfg: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Result<Self> {
        let ok_beta = |b: f64| (0.0..1.0).contains(&b);
        if !(cfg.lr > 0.0 && cfg.eps > 0.0 && ok_beta(cfg.beta1) && ok_beta(cfg.beta2)) {
            return Err(Error::invalid("Adam needs lr > 0, eps > 0 and betas in [0, 1)"));
        }
        Ok(Adam {
            cfg,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    /// A non-finite gradient aborts before anything is modified.
    pub fn step<L: DifferentiableLayer + ?Sized>(&mut self, layer: &mut L) -> Result<()> {
        let mut bad = None;
        layer.visit_params(&mut |ps| {
            for (name, p) in ps.iter() {
                if bad.is_none() && !p.grad.is_finite() {
                    bad = Some(name.to_string());
                }
            }
        });
        if let Some(name) = bad {
            return Err(Error::NonFinite(format!(
                "gradient of `{name}` at optimizer step {}",
                self.t + 1
            )));
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let (ms, vs) = (&mut self.m, &mut self.v);
        let mut k = 0;
        layer.visit_params_mut(&mut |ps| {
            for (_, p) in ps.iter_mut() {
                if k == ms.len() {
                    ms.push(vec![0.0; p.value.len()]);
                    vs.push(vec![0.0; p.value.len()]);
                }
                let (m, v) = (&mut ms[k], &mut vs[k]);
                assert_eq!(m.len(), p.value.len(), "optimizer reused across models");
                for (((w, g), m), v) in p
                    .value
                    .data_mut()
                    .iter_mut()
                    .zip(p.grad.data())
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
                p.grad.fill(0.0);
                k += 1;
            }
        });
        Ok(())
    }
}
