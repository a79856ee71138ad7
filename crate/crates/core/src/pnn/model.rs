use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::dataset::FlowDataset;
use crate::coupling::{AutoencoderPair, CouplingTrace, FnnTrace, InvertibleNet};
use crate::error::{Error, Result};
use crate::numcore::{DifferentiableLayer, ParamSet, RealArray};
use crate::sympnet::SympNet;

/// Which training objective to use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossKind {
    /// `(1/nN) Σ ‖f(x_i) − y_i‖²` of the model's one-step map `f`.
    Primary,
    /// `L_s + λ L_a`; autoencoder transforms only.
    Alternative { lambda: f64 },
}

/// The coordinate map `θ` and its (possibly approximate) inverse.
#[derive(Clone, Debug, PartialEq)]
pub enum Transform {
    Invertible(InvertibleNet),
    Autoencoder(AutoencoderPair),
}

impl Transform {
    pub fn dim(&self) -> usize {
        match self {
            Transform::Invertible(t) => t.dim(),
            Transform::Autoencoder(t) => t.dim(),
        }
    }

    /// Dimension of `θ(x)`.
    pub fn code_dim(&self) -> usize {
        match self {
            Transform::Invertible(t) => t.dim(),
            Transform::Autoencoder(t) => t.latent_dim(),
        }
    }

    pub fn encode(&self, x: &RealArray) -> Result<RealArray> {
        Ok(self.encode_trace(x)?.0)
    }

    pub fn decode(&self, z: &RealArray) -> Result<RealArray> {
        Ok(self.decode_trace(z)?.0)
    }

    fn encode_trace(&self, x: &RealArray) -> Result<(RealArray, ThetaTrace)> {
        Ok(match self {
            Transform::Invertible(t) => {
                let (z, tr) = t.forward_trace(x)?;
                (z, ThetaTrace::Coupling(tr))
            }
            Transform::Autoencoder(t) => {
                let (z, tr) = t.encode_trace(x)?;
                (z, ThetaTrace::Fnn(tr))
            }
        })
    }

    fn decode_trace(&self, z: &RealArray) -> Result<(RealArray, ThetaTrace)> {
        Ok(match self {
            Transform::Invertible(t) => {
                let (x, tr) = t.inverse_trace(z)?;
                (x, ThetaTrace::Coupling(tr))
            }
            Transform::Autoencoder(t) => {
                let (x, tr) = t.decode_trace(z)?;
                (x, ThetaTrace::Fnn(tr))
            }
        })
    }

    fn encode_backward(&mut self, tr: &ThetaTrace, g: &RealArray) -> Result<RealArray> {
        match (self, tr) {
            (Transform::Invertible(t), ThetaTrace::Coupling(tr)) => t.backward_forward(tr, g),
            (Transform::Autoencoder(t), ThetaTrace::Fnn(tr)) => t.encoder_mut().backward_trace(tr, g),
            _ => unreachable!("trace produced by the same transform"),
        }
    }

    fn decode_backward(&mut self, tr: &ThetaTrace, g: &RealArray) -> Result<RealArray> {
        match (self, tr) {
            (Transform::Invertible(t), ThetaTrace::Coupling(tr)) => t.backward_inverse(tr, g),
            (Transform::Autoencoder(t), ThetaTrace::Fnn(tr)) => t.decoder_mut().backward_trace(tr, g),
            _ => unreachable!("trace produced by the same transform"),
        }
    }

    pub fn visit(&self, f: &mut dyn FnMut(&ParamSet)) {
        match self {
            Transform::Invertible(t) => t.visit_params(f),
            Transform::Autoencoder(t) => t.visit(f),
        }
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        match self {
            Transform::Invertible(t) => t.visit_params_mut(f),
            Transform::Autoencoder(t) => t.visit_mut(f),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Transform::Invertible(t) => json!({ "type": "invertible", "net": t.to_json() }),
            Transform::Autoencoder(t) => t.to_json(),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        match v.get("type").and_then(Value::as_str) {
            Some("invertible") => {
                let net = v
                    .get("net")
                    .ok_or_else(|| Error::Format("invertible transform missing `net`".into()))?;
                Ok(Transform::Invertible(InvertibleNet::from_json(net)?))
            }
            Some("autoencoder") => Ok(Transform::Autoencoder(AutoencoderPair::from_json(v)?)),
            other => Err(Error::Format(format!("unknown transform type {other:?}"))),
        }
    }
}

enum ThetaTrace {
    Coupling(Vec<CouplingTrace>),
    Fnn(FnnTrace),
}

/// Intermediate values of `θ⁻¹ ∘ Φᵐ ∘ θ` for the backward pass.
struct StepTrace {
    encode: ThetaTrace,
    phi: Vec<Vec<RealArray>>,
    decode: ThetaTrace,
}

/// `θ⁻¹ ∘ Φ ∘ θ` with recurrence `m`: one observed step is `θ⁻¹ ∘ Φᵐ ∘ θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PnnModel {
    theta: Transform,
    phi: SympNet,
    m: usize,
}

impl PnnModel {
    pub fn new(theta: Transform, phi: SympNet, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("recurrence m must be at least 1"));
        }
        match &theta {
            Transform::Invertible(t) => {
                if phi.dim() != t.dim() {
                    return Err(Error::dims("symplectic core (ambient)", t.dim(), phi.dim()));
                }
            }
            Transform::Autoencoder(t) => {
                if phi.dim() != t.latent_dim() || phi.latent_dim() != phi.dim() {
                    return Err(Error::dims("symplectic core (latent)", t.latent_dim(), phi.dim()));
                }
            }
        }
        Ok(Self { theta, phi, m })
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    /// Latent symplectic dimension `2d`.
    pub fn latent_dim(&self) -> usize {
        self.phi.latent_dim()
    }

    pub fn recurrence(&self) -> usize {
        self.m
    }

    pub fn theta(&self) -> &Transform {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut Transform {
        &mut self.theta
    }

    pub fn phi(&self) -> &SympNet {
        &self.phi
    }

    pub fn phi_mut(&mut self) -> &mut SympNet {
        &mut self.phi
    }

    pub fn encode(&self, x: &RealArray) -> Result<RealArray> {
        self.theta.encode(x)
    }

    pub fn decode(&self, z: &RealArray) -> Result<RealArray> {
        self.theta.decode(z)
    }

    /// `Φ^steps` in latent space.
    pub fn latent_flow(&self, z: &RealArray, steps: usize) -> Result<RealArray> {
        let mut w = z.clone();
        for _ in 0..steps {
            w = self.phi.forward(&w)?;
        }
        Ok(w)
    }

    fn step_trace(&self, x: &RealArray) -> Result<(RealArray, StepTrace)> {
        let (mut w, encode) = self.theta.encode_trace(x)?;
        let mut phi = Vec::with_capacity(self.m);
        for _ in 0..self.m {
            let (next, tr) = self.phi.forward_trace(&w)?;
            phi.push(tr);
            w = next;
        }
        let (y, decode) = self.theta.decode_trace(&w)?;
        Ok((y, StepTrace { encode, phi, decode }))
    }

    fn step_backward(&mut self, tr: &StepTrace, gy: &RealArray) -> Result<RealArray> {
        let mut g = self.theta.decode_backward(&tr.decode, gy)?;
        for inputs in tr.phi.iter().rev() {
            g = self.phi.backward_trace(inputs, &g)?;
        }
        self.theta.encode_backward(&tr.encode, &g)
    }

    /// One observed step `θ⁻¹ ∘ Φᵐ ∘ θ`.
    pub fn step(&self, x: &RealArray) -> Result<RealArray> {
        Ok(self.step_trace(x)?.0)
    }

    /// Encodes once and applies `Φ` repeatedly. Returns `k` states, one per
    /// observed step, or `k·m` states (every latent step) with
    /// `emit_substeps`.
    pub fn predict(&self, x0: &RealArray, k: usize, emit_substeps: bool) -> Result<Vec<RealArray>> {
        if k == 0 {
            return Err(Error::invalid("prediction length k must be at least 1"));
        }
        let mut z = self.theta.encode(x0)?;
        let mut out = Vec::with_capacity(if emit_substeps { k * self.m } else { k });
        for j in 1..=k * self.m {
            z = self.phi.forward(&z)?;
            if emit_substeps || j % self.m == 0 {
                out.push(self.theta.decode(&z)?);
            }
        }
        Ok(out)
    }

    fn primary_forward(&self, data: &FlowDataset) -> Result<(f64, StepTrace, RealArray)> {
        if !matches!(self.theta, Transform::Invertible(_)) {
            return Err(Error::invalid("the primary loss needs an invertible transform"));
        }
        check_data(self.dim(), data)?;
        let (pred, tr) = self.step_trace(&data.x())?;
        let mut r = pred;
        r.axpy(-1.0, &data.y())?;
        let scale = 1.0 / (self.dim() * data.len()) as f64;
        let loss = r.sum_sq() * scale;
        finite_loss(loss)?;
        r.scale(2.0 * scale);
        Ok((loss, tr, r))
    }

    /// `(1/nN) Σ ‖θ⁻¹ Φᵐ θ(x_i) − y_i‖²`; gradients accumulate into all
    /// parameters.
    pub fn loss_primary(&mut self, data: &FlowDataset) -> Result<f64> {
        let (loss, tr, g) = self.primary_forward(data)?;
        self.step_backward(&tr, &g)?;
        Ok(loss)
    }

    /// `(L_s, L_a)` and, when `grad` is set, the gradient of `L_s + λL_a`.
    fn alternative_impl(&mut self, data: &FlowDataset, lambda: f64, grad: bool) -> Result<(f64, f64)> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "λ must be a finite nonnegative number, got {lambda}"
            )));
        }
        check_data(self.dim(), data)?;
        let Transform::Autoencoder(ae) = &self.theta else {
            return Err(Error::invalid("the alternative loss needs an autoencoder transform"));
        };
        let big_n = data.len() as f64;
        let (n, latent) = (self.dim() as f64, ae.latent_dim() as f64);

        let (z, enc_tr) = ae.encode_trace(data.points())?;
        let zx = z.gather_rows(data.input_index());
        let zy = z.gather_rows(data.target_index());
        let mut phi_tr = Vec::with_capacity(self.m);
        let mut w = zx;
        for _ in 0..self.m {
            let (next, tr) = self.phi.forward_trace(&w)?;
            phi_tr.push(tr);
            w = next;
        }
        let mut rs = w;
        rs.axpy(-1.0, &zy)?;
        let ls = rs.sum_sq() / (latent * big_n);

        let (rec, dec_tr) = ae.decode_trace(&z)?;
        let mut ra = rec;
        ra.axpy(-1.0, data.points())?;
        let weights = data.multiplicity();
        for (r, &wgt) in weights.iter().enumerate() {
            ra.row_mut(r).iter_mut().for_each(|v| *v *= wgt.sqrt());
        }
        let la = ra.sum_sq() / (n * big_n);
        finite_loss(ls + lambda * la)?;
        if !grad {
            return Ok((ls, la));
        }

        // ra rows carry √w; the gradient needs w, so scale by √w once more.
        for (r, &wgt) in weights.iter().enumerate() {
            ra.row_mut(r).iter_mut().for_each(|v| *v *= wgt.sqrt());
        }
        ra.scale(2.0 * lambda / (n * big_n));
        rs.scale(2.0 / (latent * big_n));

        let Transform::Autoencoder(ae) = &mut self.theta else {
            unreachable!()
        };
        let mut gz = ae.decoder_mut().backward_trace(&dec_tr, &ra)?;
        let mut gx = rs.clone();
        for inputs in phi_tr.iter().rev() {
            gx = self.phi.backward_trace(inputs, &gx)?;
        }
        gz.scatter_add_rows(data.input_index(), &gx);
        rs.scale(-1.0);
        gz.scatter_add_rows(data.target_index(), &rs);
        ae.encoder_mut().backward_trace(&enc_tr, &gz)?;
        Ok((ls, la))
    }

    /// `L_s + λ·L_a` with `L_s = (1/2dN) Σ ‖Φᵐθ(x_i) − θ(y_i)‖²` and
    /// `L_a = (1/nN) Σ (‖θ⁻¹θ(x_i) − x_i‖² + ‖θ⁻¹θ(y_i) − y_i‖²)`;
    /// gradients accumulate.
    pub fn loss_alternative(&mut self, data: &FlowDataset, lambda: f64) -> Result<f64> {
        let (ls, la) = self.alternative_impl(data, lambda, true)?;
        Ok(ls + lambda * la)
    }

    /// Both terms of the alternative loss, without touching gradients.
    pub fn alternative_terms(&self, data: &FlowDataset, lambda: f64) -> Result<(f64, f64)> {
        // The forward half never mutates; cloning keeps the signature honest.
        self.clone().alternative_impl(data, lambda, false)
    }

    pub fn loss_and_grad(&mut self, data: &FlowDataset, kind: LossKind) -> Result<f64> {
        match kind {
            LossKind::Primary => self.loss_primary(data),
            LossKind::Alternative { lambda } => self.loss_alternative(data, lambda),
        }
    }

    /// Loss value only.
    pub fn loss(&self, data: &FlowDataset, kind: LossKind) -> Result<f64> {
        match kind {
            LossKind::Primary => Ok(self.primary_forward(data)?.0),
            LossKind::Alternative { lambda } => {
                let (ls, la) = self.alternative_terms(data, lambda)?;
                Ok(ls + lambda * la)
            }
        }
    }

    pub fn default_loss(&self) -> LossKind {
        match self.theta {
            Transform::Invertible(_) => LossKind::Primary,
            Transform::Autoencoder(_) => LossKind::Alternative { lambda: 1.0 },
        }
    }
}

/// The one-step map as a layer.
impl DifferentiableLayer for PnnModel {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        self.step(x)
    }

    fn backward(&mut self, x: &RealArray, cotangent: &RealArray) -> Result<RealArray> {
        let (_, tr) = self.step_trace(x)?;
        self.step_backward(&tr, cotangent)
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        self.theta.visit(f);
        self.phi.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        self.theta.visit_mut(f);
        self.phi.visit_params_mut(f);
    }
}

pub(crate) fn check_data(n: usize, data: &FlowDataset) -> Result<()> {
    if data.dim() != n {
        return Err(Error::dims("dataset", n, data.dim()));
    }
    Ok(())
}

pub(crate) fn finite_loss(loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("loss evaluated to {loss}")))
    }
}
