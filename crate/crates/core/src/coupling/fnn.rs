use serde_json::Value;

use crate::error::{Error, Result};
use crate::numcore::{Activation, DifferentiableLayer, ParamSet, RealArray, SeededRng};
use crate::serial::ModuleDoc;
use crate::sympnet::Side;

/// Fully-connected net of `depth` affine layers; hidden layers have
/// `width` units followed by the activation, the output layer is affine.
#[derive(Clone, Debug, PartialEq)]
pub struct Fnn {
    input: usize,
    output: usize,
    depth: usize,
    width: usize,
    act: Activation,
    params: ParamSet,
}

/// Inputs to each affine layer, recorded by [`Fnn::forward_trace`].
#[derive(Clone, Debug)]
pub struct FnnTrace {
    inputs: Vec<RealArray>,
}

impl Fnn {
    /// Glorot-uniform weights and zero biases. With `zero_output` the last
    /// layer's weights also start at zero, so the net outputs zero.
    pub fn new(
        input: usize,
        output: usize,
        depth: usize,
        width: usize,
        act: Activation,
        zero_output: bool,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if input == 0 || output == 0 || depth == 0 || (depth > 1 && width == 0) {
            return Err(Error::invalid(format!(
                "fully-connected net needs positive sizes (in {input}, out {output}, depth {depth}, width {width})"
            )));
        }
        let mut params = ParamSet::new();
        for l in 0..depth {
            let fan_in = if l == 0 { input } else { width };
            let fan_out = if l + 1 == depth { output } else { width };
            let w = if l + 1 == depth && zero_output {
                RealArray::zeros(&[fan_out, fan_in])
            } else {
                rng.glorot(fan_out, fan_in)
            };
            params = params
                .with(&format!("w{l}"), w)
                .with(&format!("b{l}"), RealArray::zeros(&[fan_out]));
        }
        Ok(Self {
            input,
            output,
            depth,
            width,
            act,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn output_dim(&self) -> usize {
        self.output
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn check(&self, x: &RealArray) -> Result<()> {
        if x.cols() != self.input {
            return Err(Error::dims("fully-connected net", self.input, x.cols()));
        }
        Ok(())
    }

    fn layer(&self, l: usize, h: &RealArray) -> RealArray {
        let mut z = h.matmul_t(self.params.value(&format!("w{l}")));
        z.add_row_vector(self.params.value(&format!("b{l}")).data());
        if l + 1 < self.depth {
            let act = self.act;
            z.map_inplace(|v| act.eval(v));
        }
        z
    }

    pub fn forward_trace(&self, x: &RealArray) -> Result<(RealArray, FnnTrace)> {
        self.check(x)?;
        let rows = x.rows();
        let mut inputs = Vec::with_capacity(self.depth);
        let mut h = RealArray::matrix(rows, self.input, x.data().to_vec());
        for l in 0..self.depth {
            let next = self.layer(l, &h);
            inputs.push(h);
            h = next;
        }
        Ok((h.with_batch_shape(rows, x.shape().len() == 1), FnnTrace { inputs }))
    }

    pub fn backward_trace(&mut self, trace: &FnnTrace, gy: &RealArray) -> Result<RealArray> {
        let rows = trace.inputs[0].rows();
        if gy.cols() != self.output || gy.rows() != rows {
            return Err(Error::dims("fully-connected net cotangent", self.output, gy.cols()));
        }
        let rank_one = gy.shape().len() == 1;
        let mut g = RealArray::matrix(rows, self.output, gy.data().to_vec());
        for l in (0..self.depth).rev() {
            let a = &trace.inputs[l];
            self.params.grad_mut(&format!("w{l}")).add_t_matmul(1.0, &g, a);
            self.params.grad_mut(&format!("b{l}")).add_col_sums(&g);
            let mut gx = g.matmul(self.params.value(&format!("w{l}")));
            if l > 0 {
                let act = self.act;
                gx = gx.zip_map(a, |g, y| g * act.deriv_from_output(y))?;
            }
            g = gx;
        }
        Ok(g.with_batch_shape(rows, rank_one))
    }

    pub fn to_json(&self) -> Value {
        ModuleDoc::new("fnn")
            .activation(self.act)
            .dim("in", self.input)
            .dim("out", self.output)
            .dim("depth", self.depth)
            .dim("width", self.width)
            .params(&self.params)
            .to_value()
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let doc = ModuleDoc::from_value(v)?;
        doc.expect_kind("fnn")?;
        let mut net = Self::new(
            doc.get_dim("in")?,
            doc.get_dim("out")?,
            doc.get_dim("depth")?,
            doc.get_dim("width")?,
            doc.activation.unwrap_or_default(),
            true,
            &mut crate::numcore::seeded_rng(0),
        )?;
        net.params.load_values(&doc.params)?;
        Ok(net)
    }
}

impl DifferentiableLayer for Fnn {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        Ok(self.forward_trace(x)?.0)
    }

    fn backward(&mut self, x: &RealArray, cotangent: &RealArray) -> Result<RealArray> {
        let (_, trace) = self.forward_trace(x)?;
        self.backward_trace(&trace, cotangent)
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        f(&self.params)
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        f(&mut self.params)
    }
}

/// Splits a batch into `(active, passive)` halves for a coupling of the
/// given side: `up` updates the first `dp` columns, `low` the rest.
pub(crate) fn split_active(x: &RealArray, dp: usize, side: Side) -> (RealArray, RealArray) {
    let (x1, x2) = x.split_cols(dp);
    match side {
        Side::Up => (x1, x2),
        Side::Low => (x2, x1),
    }
}

pub(crate) fn join_active(active: &RealArray, passive: &RealArray, side: Side, like: &RealArray) -> RealArray {
    let joined = match side {
        Side::Up => RealArray::concat_cols(active, passive),
        Side::Low => RealArray::concat_cols(passive, active),
    };
    joined
        .reshape(like.shape().to_vec())
        .expect("coupling output has input shape")
}
