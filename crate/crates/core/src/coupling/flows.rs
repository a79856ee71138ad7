use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::fnn::{join_active, split_active, Fnn, FnnTrace};
use crate::error::{Error, Result};
use crate::numcore::{Activation, DifferentiableLayer, ParamSet, RealArray, SeededRng};
use crate::serial::ModuleDoc;
use crate::sympnet::Side;

/// Bound applied to affine-coupling log-scales before exponentiation.
pub const SCALE_CLAMP: f64 = 10.0;

/// Subnetwork sizes shared by every coupling module of a net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubnetSpec {
    /// Number of affine layers in each subnetwork.
    pub depth: usize,
    pub width: usize,
    #[serde(default)]
    pub activation: Activation,
}

fn check_partition(n: usize, dp: usize) -> Result<()> {
    if dp == 0 || dp >= n {
        return Err(Error::invalid(format!(
            "coupling partition must satisfy 0 < dp < n, got dp = {dp}, n = {n}"
        )));
    }
    Ok(())
}

fn io_dims(n: usize, dp: usize, side: Side) -> (usize, usize) {
    // (passive width, active width)
    match side {
        Side::Up => (n - dp, dp),
        Side::Low => (dp, n - dp),
    }
}

fn check_width(x: &RealArray, n: usize) -> Result<()> {
    if x.cols() != n || x.is_empty() {
        return Err(Error::dims("coupling", n, x.cols()));
    }
    Ok(())
}

/// Additive coupling: `up: (x₁ + m(x₂), x₂)`, `low: (x₁, x₂ + m(x₁))`.
#[derive(Clone, Debug, PartialEq)]
pub struct VpCoupling {
    n: usize,
    dp: usize,
    side: Side,
    shift: Fnn,
}

/// Affine coupling: `up: (x₁ ⊙ exp(s(x₂)) + t(x₂), x₂)`, `low` mirrored.
#[derive(Clone, Debug, PartialEq)]
pub struct NvpCoupling {
    n: usize,
    dp: usize,
    side: Side,
    scale: Fnn,
    shift: Fnn,
}

#[derive(Debug)]
pub struct CouplingTrace {
    shift: FnnTrace,
    scale: Option<FnnTrace>,
    /// Active block of the map's own input (`x` forward, `y` inverse) and
    /// of its output.
    active_in: RealArray,
    active_out: RealArray,
    /// `exp(±s)` and the clamp mask, affine couplings only.
    exp_s: Option<RealArray>,
    mask: Option<RealArray>,
}

impl VpCoupling {
    pub fn new(n: usize, dp: usize, side: Side, sub: SubnetSpec, rng: &mut SeededRng) -> Result<Self> {
        check_partition(n, dp)?;
        let (pin, pout) = io_dims(n, dp, side);
        Ok(Self {
            n,
            dp,
            side,
            shift: Fnn::new(pin, pout, sub.depth, sub.width, sub.activation, true, rng)?,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn shift_net_mut(&mut self) -> &mut Fnn {
        &mut self.shift
    }

    fn apply(&self, x: &RealArray, sign: f64) -> Result<(RealArray, CouplingTrace)> {
        check_width(x, self.n)?;
        let (active, passive) = split_active(x, self.dp, self.side);
        let (m, tr) = self.shift.forward_trace(&passive)?;
        let mut out = active.clone();
        out.axpy(sign, &m)?;
        let y = join_active(&out, &passive, self.side, x);
        Ok((
            y,
            CouplingTrace {
                shift: tr,
                scale: None,
                active_in: active,
                active_out: out,
                exp_s: None,
                mask: None,
            },
        ))
    }

    /// `sign = +1` for the forward map, `-1` for the inverse.
    fn backprop(&mut self, tr: &CouplingTrace, g: &RealArray, sign: f64, like: &RealArray) -> Result<RealArray> {
        let (ga, gp) = split_active(g, self.dp, self.side);
        let mut cot = ga.clone();
        cot.scale(sign);
        let mut gpass = gp;
        gpass.axpy(1.0, &self.shift.backward_trace(&tr.shift, &cot)?)?;
        Ok(join_active(&ga, &gpass, self.side, like))
    }
}

impl NvpCoupling {
    pub fn new(n: usize, dp: usize, side: Side, sub: SubnetSpec, rng: &mut SeededRng) -> Result<Self> {
        check_partition(n, dp)?;
        let (pin, pout) = io_dims(n, dp, side);
        Ok(Self {
            n,
            dp,
            side,
            scale: Fnn::new(pin, pout, sub.depth, sub.width, sub.activation, true, rng)?,
            shift: Fnn::new(pin, pout, sub.depth, sub.width, sub.activation, true, rng)?,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn scale_net_mut(&mut self) -> &mut Fnn {
        &mut self.scale
    }

    pub fn shift_net_mut(&mut self) -> &mut Fnn {
        &mut self.shift
    }

    fn log_scale(&self, passive: &RealArray) -> Result<(RealArray, FnnTrace, RealArray)> {
        let (raw, tr) = self.scale.forward_trace(passive)?;
        let mask = raw.map(|s| if s.abs() < SCALE_CLAMP { 1.0 } else { 0.0 });
        Ok((raw.map(|s| s.clamp(-SCALE_CLAMP, SCALE_CLAMP)), tr, mask))
    }

    fn forward_impl(&self, x: &RealArray) -> Result<(RealArray, CouplingTrace)> {
        check_width(x, self.n)?;
        let (active, passive) = split_active(x, self.dp, self.side);
        let (s, s_tr, mask) = self.log_scale(&passive)?;
        let (t, t_tr) = self.shift.forward_trace(&passive)?;
        let e = s.map(f64::exp);
        let mut out = active.zip_map(&e, |a, e| a * e)?;
        out.axpy(1.0, &t)?;
        let y = join_active(&out, &passive, self.side, x);
        Ok((
            y,
            CouplingTrace {
                shift: t_tr,
                scale: Some(s_tr),
                active_in: active,
                active_out: out,
                exp_s: Some(e),
                mask: Some(mask),
            },
        ))
    }

    fn inverse_impl(&self, y: &RealArray) -> Result<(RealArray, CouplingTrace)> {
        check_width(y, self.n)?;
        let (active, passive) = split_active(y, self.dp, self.side);
        let (s, s_tr, mask) = self.log_scale(&passive)?;
        let (t, t_tr) = self.shift.forward_trace(&passive)?;
        let e_neg = s.map(|v| (-v).exp());
        let out = active.zip_map(&t, |a, t| a - t)?.zip_map(&e_neg, |d, e| d * e)?;
        let x = join_active(&out, &passive, self.side, y);
        Ok((
            x,
            CouplingTrace {
                shift: t_tr,
                scale: Some(s_tr),
                active_in: active,
                active_out: out,
                exp_s: Some(e_neg),
                mask: Some(mask),
            },
        ))
    }

    fn backprop_forward(&mut self, tr: &CouplingTrace, gy: &RealArray, like: &RealArray) -> Result<RealArray> {
        let (ga, gp) = split_active(gy, self.dp, self.side);
        let e = tr.exp_s.as_ref().expect("affine trace");
        let mask = tr.mask.as_ref().expect("affine trace");
        let gx_active = ga.zip_map(e, |g, e| g * e)?;
        // d(x ⊙ e^s)/ds = x ⊙ e^s
        let gs = gx_active
            .zip_map(&tr.active_in, |g, x| g * x)?
            .zip_map(mask, |g, m| g * m)?;
        let mut gpass = gp;
        gpass.axpy(1.0, &self.shift.backward_trace(&tr.shift, &ga)?)?;
        gpass.axpy(
            1.0,
            &self
                .scale
                .backward_trace(tr.scale.as_ref().expect("affine trace"), &gs)?,
        )?;
        Ok(join_active(&gx_active, &gpass, self.side, like))
    }

    fn backprop_inverse(&mut self, tr: &CouplingTrace, gx: &RealArray, like: &RealArray) -> Result<RealArray> {
        let (ga, gp) = split_active(gx, self.dp, self.side);
        let e_neg = tr.exp_s.as_ref().expect("affine trace");
        let mask = tr.mask.as_ref().expect("affine trace");
        // x = (y - t) ⊙ e^{-s}
        let gy_active = ga.zip_map(e_neg, |g, e| g * e)?;
        let gt = gy_active.map(|v| -v);
        let gs = ga.zip_map(&tr.active_out, |g, x| -g * x)?.zip_map(mask, |g, m| g * m)?;
        let mut gpass = gp;
        gpass.axpy(1.0, &self.shift.backward_trace(&tr.shift, &gt)?)?;
        gpass.axpy(
            1.0,
            &self
                .scale
                .backward_trace(tr.scale.as_ref().expect("affine trace"), &gs)?,
        )?;
        Ok(join_active(&gy_active, &gpass, self.side, like))
    }

    /// `log |det D|` of the forward map at each row of `x`.
    pub fn log_det(&self, x: &RealArray) -> Result<Vec<f64>> {
        let (_, passive) = split_active(x, self.dp, self.side);
        let (s, _, _) = self.log_scale(&passive)?;
        Ok((0..s.rows()).map(|r| s.row(r).iter().sum()).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CouplingModule {
    Vp(VpCoupling),
    Nvp(NvpCoupling),
}

impl CouplingModule {
    pub fn forward_trace(&self, x: &RealArray) -> Result<(RealArray, CouplingTrace)> {
        match self {
            CouplingModule::Vp(m) => m.apply(x, 1.0),
            CouplingModule::Nvp(m) => m.forward_impl(x),
        }
    }

    pub fn inverse_trace(&self, y: &RealArray) -> Result<(RealArray, CouplingTrace)> {
        match self {
            CouplingModule::Vp(m) => m.apply(y, -1.0),
            CouplingModule::Nvp(m) => m.inverse_impl(y),
        }
    }

    pub fn backward_forward(&mut self, tr: &CouplingTrace, gy: &RealArray) -> Result<RealArray> {
        match self {
            CouplingModule::Vp(m) => m.backprop(tr, gy, 1.0, gy),
            CouplingModule::Nvp(m) => m.backprop_forward(tr, gy, gy),
        }
    }

    pub fn backward_inverse(&mut self, tr: &CouplingTrace, gx: &RealArray) -> Result<RealArray> {
        match self {
            CouplingModule::Vp(m) => m.backprop(tr, gx, -1.0, gx),
            CouplingModule::Nvp(m) => m.backprop_inverse(tr, gx, gx),
        }
    }

    pub fn forward(&self, x: &RealArray) -> Result<RealArray> {
        Ok(self.forward_trace(x)?.0)
    }

    pub fn inverse(&self, y: &RealArray) -> Result<RealArray> {
        Ok(self.inverse_trace(y)?.0)
    }

    pub fn side(&self) -> Side {
        match self {
            CouplingModule::Vp(m) => m.side,
            CouplingModule::Nvp(m) => m.side,
        }
    }

    fn visit(&self, f: &mut dyn FnMut(&ParamSet)) {
        match self {
            CouplingModule::Vp(m) => f(m.shift.params()),
            CouplingModule::Nvp(m) => {
                f(m.scale.params());
                f(m.shift.params());
            }
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        match self {
            CouplingModule::Vp(m) => f(m.shift.params_mut()),
            CouplingModule::Nvp(m) => {
                f(m.scale.params_mut());
                f(m.shift.params_mut());
            }
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CouplingModule::Vp(m) => ModuleDoc::new("vp")
                .side(m.side)
                .dim("n", m.n)
                .dim("dp", m.dp)
                .child("m", m.shift.to_json())
                .to_value(),
            CouplingModule::Nvp(m) => ModuleDoc::new("nvp")
                .side(m.side)
                .dim("n", m.n)
                .dim("dp", m.dp)
                .child("s", m.scale.to_json())
                .child("t", m.shift.to_json())
                .to_value(),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let doc = ModuleDoc::from_value(v)?;
        let (n, dp, side) = (doc.get_dim("n")?, doc.get_dim("dp")?, doc.get_side()?);
        check_partition(n, dp)?;
        let (pin, pout) = io_dims(n, dp, side);
        let load = |name: &str| -> Result<Fnn> {
            let net = Fnn::from_json(doc.get_child(name)?)?;
            if net.input_dim() != pin || net.output_dim() != pout {
                return Err(Error::Format(format!(
                    "coupling subnet `{name}` maps {} -> {}, expected {pin} -> {pout}",
                    net.input_dim(),
                    net.output_dim()
                )));
            }
            Ok(net)
        };
        Ok(match doc.kind.as_str() {
            "vp" => CouplingModule::Vp(VpCoupling {
                n,
                dp,
                side,
                shift: load("m")?,
            }),
            "nvp" => CouplingModule::Nvp(NvpCoupling {
                n,
                dp,
                side,
                scale: load("s")?,
                shift: load("t")?,
            }),
            other => return Err(Error::Format(format!("unknown coupling module `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    /// Additive, unit Jacobian determinant.
    Vp,
    /// Affine.
    Nvp,
}

/// Alternating `up, low, ...` coupling modules with a closed-form inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertibleNet {
    kind: CouplingKind,
    n: usize,
    dp: usize,
    modules: Vec<CouplingModule>,
}

impl InvertibleNet {
    pub fn new(
        kind: CouplingKind,
        n: usize,
        dp: usize,
        layers: usize,
        sub: SubnetSpec,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        check_partition(n, dp)?;
        let modules = (0..layers)
            .map(|i| {
                let side = Side::alternating(i);
                Ok(match kind {
                    CouplingKind::Vp => CouplingModule::Vp(VpCoupling::new(n, dp, side, sub, rng)?),
                    CouplingKind::Nvp => CouplingModule::Nvp(NvpCoupling::new(n, dp, side, sub, rng)?),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { kind, n, dp, modules })
    }

    pub fn kind(&self) -> CouplingKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn partition(&self) -> usize {
        self.dp
    }

    pub fn modules(&self) -> &[CouplingModule] {
        &self.modules
    }

    pub fn modules_mut(&mut self) -> &mut [CouplingModule] {
        &mut self.modules
    }

    pub fn forward_trace(&self, x: &RealArray) -> Result<(RealArray, Vec<CouplingTrace>)> {
        check_width(x, self.n)?;
        let mut traces = Vec::with_capacity(self.modules.len());
        let mut h = x.clone();
        for m in &self.modules {
            let (next, tr) = m.forward_trace(&h)?;
            traces.push(tr);
            h = next;
        }
        Ok((h, traces))
    }

    /// Applies module inverses in reverse order.
    pub fn inverse_trace(&self, z: &RealArray) -> Result<(RealArray, Vec<CouplingTrace>)> {
        check_width(z, self.n)?;
        let mut traces = Vec::with_capacity(self.modules.len());
        let mut h = z.clone();
        for m in self.modules.iter().rev() {
            let (next, tr) = m.inverse_trace(&h)?;
            traces.push(tr);
            h = next;
        }
        Ok((h, traces))
    }

    pub fn backward_forward(&mut self, traces: &[CouplingTrace], gy: &RealArray) -> Result<RealArray> {
        let mut g = gy.clone();
        for (m, tr) in self.modules.iter_mut().zip(traces).rev() {
            g = m.backward_forward(tr, &g)?;
        }
        Ok(g)
    }

    /// Cotangent of the inverse map's input, given that of its output.
    pub fn backward_inverse(&mut self, traces: &[CouplingTrace], gx: &RealArray) -> Result<RealArray> {
        let mut g = gx.clone();
        // traces[0] belongs to the last module, which the inverse ran first.
        for (m, tr) in self.modules.iter_mut().rev().zip(traces).rev() {
            g = m.backward_inverse(tr, &g)?;
        }
        Ok(g)
    }

    pub fn inverse(&self, z: &RealArray) -> Result<RealArray> {
        Ok(self.inverse_trace(z)?.0)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "n": self.n,
            "dp": self.dp,
            "modules": self.modules.iter().map(CouplingModule::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            kind: CouplingKind,
            n: usize,
            dp: usize,
            modules: Vec<Value>,
        }
        let doc = Doc::deserialize(v)?;
        check_partition(doc.n, doc.dp)?;
        let modules = doc
            .modules
            .iter()
            .map(CouplingModule::from_json)
            .collect::<Result<Vec<_>>>()?;
        for m in &modules {
            let (n, dp, kind) = match m {
                CouplingModule::Vp(c) => (c.n, c.dp, CouplingKind::Vp),
                CouplingModule::Nvp(c) => (c.n, c.dp, CouplingKind::Nvp),
            };
            if (n, dp, kind) != (doc.n, doc.dp, doc.kind) {
                return Err(Error::Format("coupling module disagrees with its net".into()));
            }
        }
        Ok(Self {
            kind: doc.kind,
            n: doc.n,
            dp: doc.dp,
            modules,
        })
    }
}

impl DifferentiableLayer for InvertibleNet {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        Ok(self.forward_trace(x)?.0)
    }

    fn backward(&mut self, x: &RealArray, cotangent: &RealArray) -> Result<RealArray> {
        let (_, traces) = self.forward_trace(x)?;
        self.backward_forward(&traces, cotangent)
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        self.modules.iter().for_each(|m| m.visit(f));
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        self.modules.iter_mut().for_each(|m| m.visit_mut(f));
    }
}

/// The inverse map `θ⁻¹` viewed as a layer of its own, for gradient checks.
pub struct InverseView<'a>(pub &'a mut InvertibleNet);

impl DifferentiableLayer for InverseView<'_> {
    fn forward(&self, z: &RealArray) -> Result<RealArray> {
        self.0.inverse(z)
    }

    fn backward(&mut self, z: &RealArray, cotangent: &RealArray) -> Result<RealArray> {
        let (_, traces) = self.0.inverse_trace(z)?;
        self.0.backward_inverse(&traces, cotangent)
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        self.0.visit_params(f)
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        self.0.visit_params_mut(f)
    }
}

/// Single coupling module as a layer, for gradient checks.
impl DifferentiableLayer for CouplingModule {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        CouplingModule::forward(self, x)
    }

    fn backward(&mut self, x: &RealArray, cotangent: &RealArray) -> Result<RealArray> {
        let (_, tr) = self.forward_trace(x)?;
        self.backward_forward(&tr, cotangent)
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        self.visit(f)
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        self.visit_mut(f)
    }
}
