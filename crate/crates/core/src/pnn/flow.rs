use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::dataset::FlowDataset;
use super::model::{check_data, finite_loss, LossKind, PnnModel, Transform};
use crate::coupling::InvertibleNet;
use crate::error::{Error, Result};
use crate::numcore::{DifferentiableLayer, ParamSet, RealArray};
use crate::sympnet::SympNet;

/// Anything the training loop can fit to snapshot pairs: a PNN, a bare
/// SympNet, or a bare invertible net used directly as the flow map (VPNN).
#[derive(Clone, Debug, PartialEq)]
pub enum FlowModel {
    Pnn(PnnModel),
    SympNet { net: SympNet, m: usize },
    Vpnn(InvertibleNet),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Pnn,
    Sympnet,
    Vpnn,
}

impl From<PnnModel> for FlowModel {
    fn from(m: PnnModel) -> Self {
        FlowModel::Pnn(m)
    }
}

impl FlowModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FlowModel::Pnn(_) => ModelKind::Pnn,
            FlowModel::SympNet { .. } => ModelKind::Sympnet,
            FlowModel::Vpnn(_) => ModelKind::Vpnn,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FlowModel::Pnn(p) => p.dim(),
            FlowModel::SympNet { net, .. } => net.dim(),
            FlowModel::Vpnn(t) => t.dim(),
        }
    }

    pub fn recurrence(&self) -> usize {
        match self {
            FlowModel::Pnn(p) => p.recurrence(),
            FlowModel::SympNet { m, .. } => *m,
            FlowModel::Vpnn(_) => 1,
        }
    }

    pub fn as_pnn(&self) -> Option<&PnnModel> {
        match self {
            FlowModel::Pnn(p) => Some(p),
            _ => None,
        }
    }

    /// One observed step.
    pub fn step(&self, x: &RealArray) -> Result<RealArray> {
        self.forward(x)
    }

    /// `k` observed steps from `x0` (or every latent substep).
    pub fn predict(&self, x0: &RealArray, k: usize, emit_substeps: bool) -> Result<Vec<RealArray>> {
        match self {
            FlowModel::Pnn(p) => p.predict(x0, k, emit_substeps),
            FlowModel::SympNet { net, m } => {
                if k == 0 {
                    return Err(Error::invalid("prediction length k must be at least 1"));
                }
                let mut z = x0.clone();
                let mut out = Vec::new();
                for j in 1..=k * m {
                    z = net.forward(&z)?;
                    if emit_substeps || j % m == 0 {
                        out.push(z.clone());
                    }
                }
                Ok(out)
            }
            FlowModel::Vpnn(t) => {
                if k == 0 {
                    return Err(Error::invalid("prediction length k must be at least 1"));
                }
                let mut z = x0.clone();
                let mut out = Vec::with_capacity(k);
                for _ in 0..k {
                    z = t.forward(&z)?;
                    out.push(z.clone());
                }
                Ok(out)
            }
        }
    }

    pub fn default_loss(&self) -> LossKind {
        match self {
            FlowModel::Pnn(p) => p.default_loss(),
            _ => LossKind::Primary,
        }
    }

    /// Plain one-step MSE for models without their own objective.
    fn mse_forward(&self, data: &FlowDataset) -> Result<(f64, RealArray, RealArray)> {
        check_data(self.dim(), data)?;
        let x = data.x();
        let mut r = self.forward(&x)?;
        r.axpy(-1.0, &data.y())?;
        let scale = 1.0 / (self.dim() * data.len()) as f64;
        let loss = r.sum_sq() * scale;
        finite_loss(loss)?;
        r.scale(2.0 * scale);
        Ok((loss, x, r))
    }

    fn check_kind(&self, kind: LossKind) -> Result<()> {
        if !matches!(self, FlowModel::Pnn(_)) && kind != LossKind::Primary {
            return Err(Error::invalid("bare networks only support the primary loss"));
        }
        Ok(())
    }

    pub fn loss(&self, data: &FlowDataset, kind: LossKind) -> Result<f64> {
        self.check_kind(kind)?;
        match self {
            FlowModel::Pnn(p) => p.loss(data, kind),
            _ => Ok(self.mse_forward(data)?.0),
        }
    }

    /// Loss value; gradients accumulate into the parameters.
    pub fn loss_and_grad(&mut self, data: &FlowDataset, kind: LossKind) -> Result<f64> {
        self.check_kind(kind)?;
        if let FlowModel::Pnn(p) = self {
            return p.loss_and_grad(data, kind);
        }
        let (loss, x, g) = self.mse_forward(data)?;
        self.backward(&x, &g)?;
        Ok(loss)
    }

    pub fn to_checkpoint(&self, metadata: Value) -> Checkpoint {
        let (theta, phi, latent) = match self {
            FlowModel::Pnn(p) => (Some(p.theta().to_json()), Some(p.phi().to_json()), p.latent_dim()),
            FlowModel::SympNet { net, .. } => (None, Some(net.to_json()), net.latent_dim()),
            FlowModel::Vpnn(t) => (Some(Transform::Invertible(t.clone()).to_json()), None, t.dim()),
        };
        Checkpoint {
            model: self.kind(),
            theta,
            phi,
            dims: Dims { n: self.dim(), latent },
            m: self.recurrence(),
            metadata,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        fn part<'a>(v: &'a Option<Value>, what: &str) -> Result<&'a Value> {
            v.as_ref()
                .ok_or_else(|| Error::Format(format!("checkpoint missing `{what}`")))
        }
        let model = match ck.model {
            ModelKind::Pnn => FlowModel::Pnn(PnnModel::new(
                Transform::from_json(part(&ck.theta, "theta")?)?,
                SympNet::from_json(part(&ck.phi, "phi")?)?,
                ck.m,
            )?),
            ModelKind::Sympnet => {
                if ck.m == 0 {
                    return Err(Error::Format("recurrence m must be at least 1".into()));
                }
                FlowModel::SympNet {
                    net: SympNet::from_json(part(&ck.phi, "phi")?)?,
                    m: ck.m,
                }
            }
            ModelKind::Vpnn => match Transform::from_json(part(&ck.theta, "theta")?)? {
                Transform::Invertible(t) => FlowModel::Vpnn(t),
                Transform::Autoencoder(_) => return Err(Error::Format("VPNN checkpoint holds an autoencoder".into())),
            },
        };
        if model.dim() != ck.dims.n {
            return Err(Error::Format(format!(
                "checkpoint declares n = {} but its networks act on {}",
                ck.dims.n,
                model.dim()
            )));
        }
        Ok(model)
    }
}

/// The one-step map as a layer.
impl DifferentiableLayer for FlowModel {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        match self {
            FlowModel::Pnn(p) => p.forward(x),
            FlowModel::SympNet { net, m } => {
                let mut z = net.forward(x)?;
                for _ in 1..*m {
                    z = net.forward(&z)?;
                }
                Ok(z)
            }
            FlowModel::Vpnn(t) => t.forward(x),
        }
    }

    fn backward(&mut self, x: &RealArray, cotangent: &RealArray) -> Result<RealArray> {
        match self {
            FlowModel::Pnn(p) => p.backward(x, cotangent),
            FlowModel::SympNet { net, m } => {
                let mut traces = Vec::with_capacity(*m);
                let mut z = x.clone();
                for _ in 0..*m {
                    let (next, tr) = net.forward_trace(&z)?;
                    traces.push(tr);
                    z = next;
                }
                let mut g = cotangent.clone();
                for tr in traces.iter().rev() {
                    g = net.backward_trace(tr, &g)?;
                }
                Ok(g)
            }
            FlowModel::Vpnn(t) => t.backward(x, cotangent),
        }
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        match self {
            FlowModel::Pnn(p) => p.visit_params(f),
            FlowModel::SympNet { net, .. } => net.visit_params(f),
            FlowModel::Vpnn(t) => t.visit_params(f),
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        match self {
            FlowModel::Pnn(p) => p.visit_params_mut(f),
            FlowModel::SympNet { net, .. } => net.visit_params_mut(f),
            FlowModel::Vpnn(t) => t.visit_params_mut(f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub latent: usize,
}

/// `{model, theta, phi, dims, m, metadata}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Value>,
    pub dims: Dims,
    pub m: usize,
    #[serde(default)]
    pub metadata: Value,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
