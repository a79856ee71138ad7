use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::modules::{check_cols, ActivationModule, ExtendedModule, GradientModule, LinearModule};
use crate::error::{Error, Result};
use crate::numcore::{Activation, DifferentiableLayer, ParamSet, RealArray, SeededRng};
use crate::serial::{ModuleDoc, Side};

#[derive(Clone, Debug, PartialEq)]
pub enum SympModule {
    Linear(LinearModule),
    Activation(ActivationModule),
    Gradient(GradientModule),
    Extended(ExtendedModule),
}

impl SympModule {
    fn layer(&self) -> &dyn DifferentiableLayer {
        match self {
            SympModule::Linear(m) => m,
            SympModule::Activation(m) => m,
            SympModule::Gradient(m) => m,
            SympModule::Extended(m) => m,
        }
    }

    fn layer_mut(&mut self) -> &mut dyn DifferentiableLayer {
        match self {
            SympModule::Linear(m) => m,
            SympModule::Activation(m) => m,
            SympModule::Gradient(m) => m,
            SympModule::Extended(m) => m,
        }
    }

    pub fn to_doc(&self) -> ModuleDoc {
        match self {
            SympModule::Linear(m) => m.to_doc(),
            SympModule::Activation(m) => m.to_doc(),
            SympModule::Gradient(m) => m.to_doc(),
            SympModule::Extended(m) => m.to_doc(),
        }
    }

    pub fn from_doc(doc: &ModuleDoc) -> Result<Self> {
        Ok(match doc.kind.as_str() {
            "linear" => SympModule::Linear(LinearModule::from_doc(doc)?),
            "activation" => SympModule::Activation(ActivationModule::from_doc(doc)?),
            "gradient" => SympModule::Gradient(GradientModule::from_doc(doc)?),
            "extended" => SympModule::Extended(ExtendedModule::from_doc(doc)?),
            other => return Err(Error::Format(format!("unknown symplectic module `{other}`"))),
        })
    }
}

impl DifferentiableLayer for SympModule {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        self.layer().forward(x)
    }

    fn backward(&mut self, x: &RealArray, cotangent: &RealArray) -> Result<RealArray> {
        self.layer_mut().backward(x, cotangent)
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        self.layer().visit_params(f)
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        self.layer_mut().visit_params_mut(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SympNetKind {
    /// Linear + activation modules.
    La,
    /// Gradient modules.
    G,
    /// Extended modules, latent `2d <= n`.
    E,
}

/// Ordered composition of symplectic (or extended symplectic) modules.
#[derive(Clone, Debug, PartialEq)]
pub struct SympNet {
    kind: SympNetKind,
    d: usize,
    n: usize,
    modules: Vec<SympModule>,
}

impl SympNet {
    /// `layers` linear modules of `sublayers` factors each, interleaved with
    /// `layers - 1` activation modules (sides alternating from `up`).
    pub fn la(d: usize, layers: usize, sublayers: usize, act: Activation) -> Result<Self> {
        check_d(d)?;
        let mut modules = Vec::new();
        for i in 0..layers {
            modules.push(SympModule::Linear(LinearModule::new(d, sublayers, Side::Up)));
            if i + 1 < layers {
                modules.push(SympModule::Activation(ActivationModule::new(
                    d,
                    Side::alternating(i),
                    act,
                )));
            }
        }
        Ok(Self {
            kind: SympNetKind::La,
            d,
            n: 2 * d,
            modules,
        })
    }

    /// `layers` gradient modules alternating `up, low, up, ...`.
    pub fn g(d: usize, layers: usize, width: usize, act: Activation, rng: &mut SeededRng) -> Result<Self> {
        check_d(d)?;
        let modules = (0..layers)
            .map(|i| SympModule::Gradient(GradientModule::new(d, width, Side::alternating(i), act, rng)))
            .collect();
        Ok(Self {
            kind: SympNetKind::G,
            d,
            n: 2 * d,
            modules,
        })
    }

    /// `layers` extended modules on `ℝⁿ` with latent dimension `2d`.
    pub fn e(n: usize, d: usize, layers: usize, width: usize, act: Activation, rng: &mut SeededRng) -> Result<Self> {
        check_d(d)?;
        let modules = (0..layers)
            .map(|i| ExtendedModule::new(n, d, width, Side::alternating(i), act, rng).map(SympModule::Extended))
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: SympNetKind::E,
            d,
            n,
            modules,
        })
    }

    pub fn kind(&self) -> SympNetKind {
        self.kind
    }

    /// Half the latent dimension.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn latent_dim(&self) -> usize {
        2 * self.d
    }

    /// Ambient dimension the net acts on.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn modules(&self) -> &[SympModule] {
        &self.modules
    }

    pub fn modules_mut(&mut self) -> &mut [SympModule] {
        &mut self.modules
    }

    /// Forward pass that also returns each module's input.
    pub fn forward_trace(&self, x: &RealArray) -> Result<(RealArray, Vec<RealArray>)> {
        check_cols(x, self.n, "symplectic net")?;
        let mut inputs = Vec::with_capacity(self.modules.len());
        let mut h = x.clone();
        for m in &self.modules {
            let next = m.forward(&h)?;
            inputs.push(h);
            h = next;
        }
        Ok((h, inputs))
    }

    pub fn backward_trace(&mut self, inputs: &[RealArray], gy: &RealArray) -> Result<RealArray> {
        let mut g = gy.clone();
        for (m, x) in self.modules.iter_mut().zip(inputs).rev() {
            g = m.backward(x, &g)?;
        }
        Ok(g)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "d": self.d,
            "n": self.n,
            "modules": self.modules.iter().map(|m| m.to_doc().to_value()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            kind: SympNetKind,
            d: usize,
            n: usize,
            modules: Vec<Value>,
        }
        let doc = Doc::deserialize(v)?;
        check_d(doc.d)?;
        if 2 * doc.d > doc.n || (doc.kind != SympNetKind::E && doc.n != 2 * doc.d) {
            return Err(Error::Format(format!(
                "inconsistent symplectic net dims: kind {:?}, d = {}, n = {}",
                doc.kind, doc.d, doc.n
            )));
        }
        let modules = doc
            .modules
            .iter()
            .map(|m| SympModule::from_doc(&ModuleDoc::from_value(m)?))
            .collect::<Result<Vec<_>>>()?;
        let net = Self {
            kind: doc.kind,
            d: doc.d,
            n: doc.n,
            modules,
        };
        // Every member must accept the net's ambient width.
        let probe = RealArray::zeros(&[net.n]);
        net.forward(&probe)
            .map_err(|e| Error::Format(format!("module dims disagree with net: {e}")))?;
        Ok(net)
    }
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::invalid("latent half-dimension d must be positive"))
    } else {
        Ok(())
    }
}

impl DifferentiableLayer for SympNet {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        check_cols(x, self.n, "symplectic net")?;
        self.modules.iter().try_fold(x.clone(), |h, m| m.forward(&h))
    }

    fn backward(&mut self, x: &RealArray, cotangent: &RealArray) -> Result<RealArray> {
        let (_, inputs) = self.forward_trace(x)?;
        self.backward_trace(&inputs, cotangent)
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        self.modules.iter().for_each(|m| m.visit_params(f));
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        self.modules.iter_mut().for_each(|m| m.visit_params_mut(f));
    }
}
