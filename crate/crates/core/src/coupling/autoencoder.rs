use serde_json::{json, Value};

use super::fnn::{Fnn, FnnTrace};
use crate::error::{Error, Result};
use crate::numcore::{Activation, ParamSet, RealArray, SeededRng};

/// Encoder `n → 2d` and decoder `2d → n` of equal depth and width.
/// Decoding an encoding is not the identity in general.
#[derive(Clone, Debug, PartialEq)]
pub struct AutoencoderPair {
    encoder: Fnn,
    decoder: Fnn,
}

impl AutoencoderPair {
    /// `depth` affine layers per net; hidden width must be at least `latent`.
    pub fn new(
        n: usize,
        latent: usize,
        depth: usize,
        width: usize,
        act: Activation,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        check_dims(n, latent, depth, width)?;
        Ok(Self {
            encoder: Fnn::new(n, latent, depth, width, act, false, rng)?,
            decoder: Fnn::new(latent, n, depth, width, act, false, rng)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn encoder(&self) -> &Fnn {
        &self.encoder
    }

    pub fn encoder_mut(&mut self) -> &mut Fnn {
        &mut self.encoder
    }

    pub fn decoder(&self) -> &Fnn {
        &self.decoder
    }

    pub fn decoder_mut(&mut self) -> &mut Fnn {
        &mut self.decoder
    }

    pub fn encode(&self, x: &RealArray) -> Result<RealArray> {
        Ok(self.encoder.forward_trace(x)?.0)
    }

    pub fn decode(&self, z: &RealArray) -> Result<RealArray> {
        Ok(self.decoder.forward_trace(z)?.0)
    }

    pub fn encode_trace(&self, x: &RealArray) -> Result<(RealArray, FnnTrace)> {
        self.encoder.forward_trace(x)
    }

    pub fn decode_trace(&self, z: &RealArray) -> Result<(RealArray, FnnTrace)> {
        self.decoder.forward_trace(z)
    }

    pub fn visit(&self, f: &mut dyn FnMut(&ParamSet)) {
        f(self.encoder.params());
        f(self.decoder.params());
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        f(self.encoder.params_mut());
        f(self.decoder.params_mut());
    }

    pub fn to_json(&self) -> Value {
        json!({
            "type": "autoencoder",
            "encoder": self.encoder.to_json(),
            "decoder": self.decoder.to_json(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let part = |key: &str| {
            v.get(key)
                .ok_or_else(|| Error::Format(format!("autoencoder missing `{key}`")))
                .and_then(Fnn::from_json)
        };
        let (encoder, decoder) = (part("encoder")?, part("decoder")?);
        if encoder.input_dim() != decoder.output_dim() || encoder.output_dim() != decoder.input_dim() {
            return Err(Error::Format("autoencoder encoder/decoder shapes disagree".into()));
        }
        check_dims(
            encoder.input_dim(),
            encoder.output_dim(),
            encoder.depth(),
            encoder.width(),
        )?;
        Ok(Self { encoder, decoder })
    }
}

fn check_dims(n: usize, latent: usize, depth: usize, width: usize) -> Result<()> {
    if latent == 0 || latent >= n || !latent.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "autoencoder latent dimension must be even and below n = {n}, got {latent}"
        )));
    }
    if depth > 1 && width < latent {
        return Err(Error::invalid(format!(
            "autoencoder hidden width {width} is below latent dimension {latent}"
        )));
    }
    Ok(())
}
