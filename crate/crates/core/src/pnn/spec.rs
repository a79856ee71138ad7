use serde::{Deserialize, Serialize};

use super::flow::{FlowModel, ModelKind};
use super::model::{PnnModel, Transform};
use crate::coupling::{AutoencoderPair, CouplingKind, InvertibleNet, SubnetSpec};
use crate::error::{Error, Result};
use crate::numcore::{Activation, SeededRng};
use crate::sympnet::{SympNet, SympNetKind};

fn one() -> usize {
    1
}

/// Architecture of `θ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ThetaSpec {
    Vp {
        partition: usize,
        layers: usize,
        sublayers: usize,
        width: usize,
    },
    Nvp {
        partition: usize,
        layers: usize,
        sublayers: usize,
        width: usize,
    },
    /// Encoder and decoder of `layers` affine layers each.
    Ae { layers: usize, width: usize },
}

/// Architecture of `Φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSpec {
    #[serde(rename = "type")]
    pub kind: SympNetKind,
    pub layers: usize,
    #[serde(default)]
    pub sublayers: Option<usize>,
    #[serde(default)]
    pub width: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    #[serde(default)]
    pub theta: Option<ThetaSpec>,
    #[serde(default)]
    pub phi: Option<PhiSpec>,
    /// Latent symplectic dimension `2d`; defaults to the ambient dimension.
    #[serde(default)]
    pub latent: Option<usize>,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl ModelSpec {
    /// Checks every cross-field constraint against ambient dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let latent = self.latent.unwrap_or(n);
        let bad = |msg: String| Err(Error::invalid(msg));
        if n == 0 {
            return bad("ambient dimension must be positive".into());
        }
        if self.m == 0 {
            return bad("recurrence m must be at least 1".into());
        }
        if latent == 0 || !latent.is_multiple_of(2) || latent > n {
            return bad(format!(
                "latent dimension 2d = {latent} must be even and at most n = {n}"
            ));
        }
        if let Some(t) = self.theta {
            match t {
                ThetaSpec::Vp {
                    partition,
                    layers,
                    sublayers,
                    width,
                }
                | ThetaSpec::Nvp {
                    partition,
                    layers,
                    sublayers,
                    width,
                } => {
                    if partition == 0 || partition >= n {
                        return bad(format!("partition {partition} must lie in 1..{n}"));
                    }
                    if layers == 0 || sublayers == 0 || (sublayers > 1 && width == 0) {
                        return bad("coupling layers, sublayers and width must be positive".into());
                    }
                }
                ThetaSpec::Ae { layers, width } => {
                    if latent >= n {
                        return bad(format!("an autoencoder needs 2d < n, got 2d = {latent}, n = {n}"));
                    }
                    if layers == 0 || (layers > 1 && width < latent) {
                        return bad(format!("autoencoder width {width} must be at least 2d = {latent}"));
                    }
                }
            }
        }
        if let Some(p) = self.phi {
            if p.layers == 0 {
                return bad("Φ needs at least one layer".into());
            }
            match p.kind {
                SympNetKind::La => {
                    if p.sublayers.unwrap_or(0) == 0 {
                        return bad("an LA-SympNet needs `sublayers` ≥ 1".into());
                    }
                }
                SympNetKind::G | SympNetKind::E => {
                    if p.width.unwrap_or(0) == 0 {
                        return bad("G/E-SympNets need `width` ≥ 1".into());
                    }
                }
            }
        }
        match (self.model, self.theta, self.phi) {
            (ModelKind::Pnn, Some(t), Some(p)) => {
                let is_ae = matches!(t, ThetaSpec::Ae { .. });
                if !is_ae && latent < n && p.kind != SympNetKind::E {
                    return bad("with 2d < n an invertible θ needs an E-SympNet Φ".into());
                }
                if is_ae && p.kind == SympNetKind::E {
                    return bad("an autoencoder θ pairs with an LA or G SympNet".into());
                }
                Ok(())
            }
            (ModelKind::Pnn, _, _) => bad("a PNN needs both `theta` and `phi`".into()),
            (ModelKind::Sympnet, None, Some(p)) => {
                if latent != n || p.kind == SympNetKind::E {
                    return bad("a bare SympNet acts on the full even-dimensional space".into());
                }
                Ok(())
            }
            (ModelKind::Sympnet, _, _) => bad("a bare SympNet takes `phi` only".into()),
            (ModelKind::Vpnn, Some(ThetaSpec::Vp { .. } | ThetaSpec::Nvp { .. }), None) => {
                if self.m != 1 {
                    return bad("a bare invertible net has no recurrence".into());
                }
                Ok(())
            }
            (ModelKind::Vpnn, _, _) => bad("a VPNN takes an invertible `theta` only".into()),
        }
    }

    pub fn build(&self, n: usize, rng: &mut SeededRng) -> Result<FlowModel> {
        self.validate(n)?;
        let latent = self.latent.unwrap_or(n);
        let act = self.activation;
        let theta = self
            .theta
            .map(|t| -> Result<Transform> {
                Ok(match t {
                    ThetaSpec::Vp {
                        partition,
                        layers,
                        sublayers,
                        width,
                    } => Transform::Invertible(InvertibleNet::new(
                        CouplingKind::Vp,
                        n,
                        partition,
                        layers,
                        sub(sublayers, width, act),
                        rng,
                    )?),
                    ThetaSpec::Nvp {
                        partition,
                        layers,
                        sublayers,
                        width,
                    } => Transform::Invertible(InvertibleNet::new(
                        CouplingKind::Nvp,
                        n,
                        partition,
                        layers,
                        sub(sublayers, width, act),
                        rng,
                    )?),
                    ThetaSpec::Ae { layers, width } => {
                        Transform::Autoencoder(AutoencoderPair::new(n, latent, layers, width, act, rng)?)
                    }
                })
            })
            .transpose()?;
        let phi_dim = match theta {
            Some(Transform::Autoencoder(_)) => latent,
            _ => n,
        };
        let phi = self
            .phi
            .map(|p| -> Result<SympNet> {
                let d = latent / 2;
                match p.kind {
                    SympNetKind::La => SympNet::la(d, p.layers, p.sublayers.unwrap_or(1), act),
                    SympNetKind::G => SympNet::g(d, p.layers, p.width.unwrap_or(1), act, rng),
                    SympNetKind::E => SympNet::e(phi_dim, d, p.layers, p.width.unwrap_or(1), act, rng),
                }
            })
            .transpose()?;
        Ok(match (self.model, theta, phi) {
            (ModelKind::Pnn, Some(t), Some(p)) => FlowModel::Pnn(PnnModel::new(t, p, self.m)?),
            (ModelKind::Sympnet, None, Some(net)) => FlowModel::SympNet { net, m: self.m },
            (ModelKind::Vpnn, Some(Transform::Invertible(t)), None) => FlowModel::Vpnn(t),
            _ => unreachable!("validated above"),
        })
    }
}

fn sub(depth: usize, width: usize, activation: Activation) -> SubnetSpec {
    SubnetSpec {
        depth,
        width,
        activation,
    }
}
