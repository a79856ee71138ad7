//! Linear, activation, gradient and extended modules.
//!
//! Every module acts on a batch `[rows, n]` laid out as `(p, q, c)` with
//! `p, q ∈ ℝᵈ` and `c ∈ ℝⁿ⁻²ᵈ`; only the extended module has a nonempty `c`.

use crate::error::{Error, Result};
use crate::numcore::{Activation, DifferentiableLayer, ParamSet, RealArray, SeededRng};
use crate::serial::{ModuleDoc, Side};

pub(crate) fn check_cols(x: &RealArray, n: usize, context: &'static str) -> Result<()> {
    if x.cols() != n || x.is_empty() {
        return Err(Error::dims(context, n, x.cols()));
    }
    Ok(())
}

fn split3(x: &RealArray, d: usize) -> (RealArray, RealArray, Option<RealArray>) {
    let (p, rest) = x.split_cols(d);
    if rest.cols() == d {
        (p, rest, None)
    } else {
        let (q, c) = rest.split_cols(d);
        (p, q, Some(c))
    }
}

fn join3(p: &RealArray, q: &RealArray, c: Option<&RealArray>, like: &RealArray) -> RealArray {
    let pq = RealArray::concat_cols(p, q);
    let full = match c {
        Some(c) => RealArray::concat_cols(&pq, c),
        None => pq,
    };
    full.reshape(like.shape().to_vec())
        .expect("module output has input shape")
}

/// `S = A + Aᵀ`.
fn symmetrize(a: &RealArray) -> RealArray {
    let d = a.rows();
    let mut s = RealArray::zeros(&[d, d]);
    for i in 0..d {
        for j in 0..d {
            s.data_mut()[i * d + j] = a.data()[i * d + j] + a.data()[j * d + i];
        }
    }
    s
}

/// Shared kernel of gradient and extended modules:
/// `U = K₁ᵀ(a ⊙ σ(K₁ x + K₂ c + b))`, row-wise.
struct Potential<'a> {
    act: Activation,
    k1: &'a RealArray,
    k2: Option<&'a RealArray>,
    a: &'a [f64],
    b: &'a [f64],
}

impl Potential<'_> {
    /// Returns the update and the activations `σ(Z)`.
    fn forward(&self, x: &RealArray, c: Option<&RealArray>) -> (RealArray, RealArray) {
        let mut z = x.matmul_t(self.k1);
        if let (Some(k2), Some(c)) = (self.k2, c) {
            z.axpy(1.0, &c.matmul_t(k2)).expect("potential shapes");
        }
        z.add_row_vector(self.b);
        let act = self.act;
        let s = z.map(|v| act.eval(v));
        let mut g = s.clone();
        scale_cols(&mut g, self.a);
        (g.matmul(self.k1), s)
    }

    /// Accumulates `(ga, gb, gK1, gK2)` and returns `(gx, gc)`.
    #[allow(clippy::too_many_arguments)]
    fn backward(
        &self,
        x: &RealArray,
        c: Option<&RealArray>,
        s: &RealArray,
        gu: &RealArray,
        ga: &mut RealArray,
        gb: &mut RealArray,
        gk1: &mut RealArray,
        gk2: Option<&mut RealArray>,
    ) -> (RealArray, Option<RealArray>) {
        let gg = gu.matmul_t(self.k1);
        ga.add_col_sums(&gg.zip_map(s, |g, s| g * s).expect("same shape"));

        let act = self.act;
        let mut gz = gg.zip_map(s, |g, s| g * act.deriv_from_output(s)).expect("same shape");
        scale_cols(&mut gz, self.a);
        gb.add_col_sums(&gz);

        let mut g = s.clone();
        scale_cols(&mut g, self.a);
        gk1.add_t_matmul(1.0, &g, gu);
        gk1.add_t_matmul(1.0, &gz, x);

        let gx = gz.matmul(self.k1);
        let gc = match (self.k2, c, gk2) {
            (Some(k2), Some(c), Some(gk2)) => {
                gk2.add_t_matmul(1.0, &gz, c);
                Some(gz.matmul(k2))
            }
            _ => None,
        };
        (gx, gc)
    }
}

fn scale_cols(m: &mut RealArray, v: &[f64]) {
    let c = m.cols();
    for row in m.data_mut().chunks_mut(c) {
        row.iter_mut().zip(v).for_each(|(x, s)| *x *= s);
    }
}

/// Alternating unit-triangular symplectic factors followed by a bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModule {
    d: usize,
    sublayers: usize,
    parity: Side,
    params: ParamSet,
}

impl LinearModule {
    /// Identity-initialized: every `A_i` and `b` start at zero.
    pub fn new(d: usize, sublayers: usize, parity: Side) -> Self {
        let mut params = ParamSet::new();
        for i in 0..sublayers {
            params = params.with(&format!("a{i}"), RealArray::zeros(&[d, d]));
        }
        params = params.with("b", RealArray::zeros(&[2 * d]));
        Self {
            d,
            sublayers,
            parity,
            params,
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn is_upper(&self, i: usize) -> bool {
        i.is_multiple_of(2) == (self.parity == Side::Up)
    }

    fn factor(&self, i: usize) -> RealArray {
        symmetrize(self.params.value(&format!("a{i}")))
    }

    fn run(&self, x: &RealArray, mut record: Option<&mut Vec<(RealArray, RealArray)>>) -> RealArray {
        let (mut p, mut q) = x.split_cols(self.d);
        for i in 0..self.sublayers {
            if let Some(states) = record.as_deref_mut() {
                states.push((p.clone(), q.clone()));
            }
            let s = self.factor(i);
            if self.is_upper(i) {
                p.axpy(1.0, &q.matmul(&s)).expect("linear shapes");
            } else {
                q.axpy(1.0, &p.matmul(&s)).expect("linear shapes");
            }
        }
        let mut y = RealArray::concat_cols(&p, &q);
        y.add_row_vector(self.params.value("b").data());
        y.reshape(x.shape().to_vec()).expect("same shape")
    }

    pub fn to_doc(&self) -> ModuleDoc {
        ModuleDoc::new("linear")
            .side(self.parity)
            .dim("d", self.d)
            .dim("sublayers", self.sublayers)
            .params(&self.params)
    }

    pub fn from_doc(doc: &ModuleDoc) -> Result<Self> {
        doc.expect_kind("linear")?;
        let mut m = Self::new(doc.get_dim("d")?, doc.get_dim("sublayers")?, doc.get_side()?);
        m.params.load_values(&doc.params)?;
        Ok(m)
    }
}

impl DifferentiableLayer for LinearModule {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        check_cols(x, 2 * self.d, "linear module")?;
        Ok(self.run(x, None))
    }

    fn backward(&mut self, x: &RealArray, gy: &RealArray) -> Result<RealArray> {
        check_cols(x, 2 * self.d, "linear module")?;
        x.check_same(gy, "linear module cotangent")?;
        let mut states = Vec::with_capacity(self.sublayers);
        self.run(x, Some(&mut states));

        self.params.grad_mut("b").add_col_sums(gy);
        let (mut gp, mut gq) = gy.split_cols(self.d);
        for i in (0..self.sublayers).rev() {
            let s = self.factor(i);
            let (p, q) = &states[i];
            let mut gs = RealArray::zeros(&[self.d, self.d]);
            if self.is_upper(i) {
                gs.add_t_matmul(1.0, q, &gp);
                gq.axpy(1.0, &gp.matmul(&s))?;
            } else {
                gs.add_t_matmul(1.0, p, &gq);
                gp.axpy(1.0, &gq.matmul(&s))?;
            }
            // S = A + Aᵀ, so dL/dA = G + Gᵀ.
            self.params.grad_mut(&format!("a{i}")).axpy(1.0, &symmetrize(&gs))?;
        }
        RealArray::concat_cols(&gp, &gq).reshape(x.shape().to_vec())
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        f(&self.params)
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        f(&mut self.params)
    }
}

/// `up: (p + a⊙σ(q), q)`, `low: (p, a⊙σ(p) + q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationModule {
    d: usize,
    side: Side,
    act: Activation,
    params: ParamSet,
}

impl ActivationModule {
    /// `a = 0`, so the module starts as the identity.
    pub fn new(d: usize, side: Side, act: Activation) -> Self {
        Self {
            d,
            side,
            act,
            params: ParamSet::new().with("a", RealArray::zeros(&[d])),
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn to_doc(&self) -> ModuleDoc {
        ModuleDoc::new("activation")
            .side(self.side)
            .activation(self.act)
            .dim("d", self.d)
            .params(&self.params)
    }

    pub fn from_doc(doc: &ModuleDoc) -> Result<Self> {
        doc.expect_kind("activation")?;
        let mut m = Self::new(doc.get_dim("d")?, doc.get_side()?, doc.activation.unwrap_or_default());
        m.params.load_values(&doc.params)?;
        Ok(m)
    }
}

impl DifferentiableLayer for ActivationModule {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        check_cols(x, 2 * self.d, "activation module")?;
        let (mut p, mut q) = x.split_cols(self.d);
        let a = self.params.value("a").data();
        let (target, driver) = match self.side {
            Side::Up => (&mut p, &q),
            Side::Low => (&mut q, &p),
        };
        let mut s = self.act.apply(driver);
        scale_cols(&mut s, a);
        target.axpy(1.0, &s)?;
        RealArray::concat_cols(&p, &q).reshape(x.shape().to_vec())
    }

    fn backward(&mut self, x: &RealArray, gy: &RealArray) -> Result<RealArray> {
        check_cols(x, 2 * self.d, "activation module")?;
        x.check_same(gy, "activation module cotangent")?;
        let (p, q) = x.split_cols(self.d);
        let (mut gp, mut gq) = gy.split_cols(self.d);
        let driver = match self.side {
            Side::Up => &q,
            Side::Low => &p,
        };
        let (g_target, g_driver) = match self.side {
            Side::Up => (&gp, &mut gq),
            Side::Low => (&gq, &mut gp),
        };
        let s = self.act.apply(driver);
        let act = self.act;
        self.params
            .grad_mut("a")
            .add_col_sums(&g_target.zip_map(&s, |g, s| g * s)?);
        let mut gd = g_target.zip_map(&s, |g, s| g * act.deriv_from_output(s))?;
        scale_cols(&mut gd, self.params.value("a").data());
        g_driver.axpy(1.0, &gd)?;
        RealArray::concat_cols(&gp, &gq).reshape(x.shape().to_vec())
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        f(&self.params)
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        f(&mut self.params)
    }
}

/// `up: (p + Kᵀ(a⊙σ(Kq + b)), q)`, `low` mirrored. `K` is `width x d`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientModule {
    d: usize,
    width: usize,
    side: Side,
    act: Activation,
    params: ParamSet,
}

impl GradientModule {
    /// Glorot-uniform `K`, zero `a` and `b`.
    pub fn new(d: usize, width: usize, side: Side, act: Activation, rng: &mut SeededRng) -> Self {
        let params = ParamSet::new()
            .with("k", rng.glorot(width, d))
            .with("a", RealArray::zeros(&[width]))
            .with("b", RealArray::zeros(&[width]));
        Self {
            d,
            width,
            side,
            act,
            params,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn potential(&self) -> Potential<'_> {
        Potential {
            act: self.act,
            k1: self.params.value("k"),
            k2: None,
            a: self.params.value("a").data(),
            b: self.params.value("b").data(),
        }
    }

    pub fn to_doc(&self) -> ModuleDoc {
        ModuleDoc::new("gradient")
            .side(self.side)
            .activation(self.act)
            .dim("d", self.d)
            .dim("width", self.width)
            .params(&self.params)
    }

    pub fn from_doc(doc: &ModuleDoc) -> Result<Self> {
        doc.expect_kind("gradient")?;
        let (d, width) = (doc.get_dim("d")?, doc.get_dim("width")?);
        let mut params = ParamSet::new()
            .with("k", RealArray::zeros(&[width, d]))
            .with("a", RealArray::zeros(&[width]))
            .with("b", RealArray::zeros(&[width]));
        params.load_values(&doc.params)?;
        Ok(Self {
            d,
            width,
            side: doc.get_side()?,
            act: doc.activation.unwrap_or_default(),
            params,
        })
    }
}

impl DifferentiableLayer for GradientModule {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        check_cols(x, 2 * self.d, "gradient module")?;
        let (mut p, mut q) = x.split_cols(self.d);
        match self.side {
            Side::Up => p.axpy(1.0, &self.potential().forward(&q, None).0)?,
            Side::Low => q.axpy(1.0, &self.potential().forward(&p, None).0)?,
        }
        Ok(join3(&p, &q, None, x))
    }

    fn backward(&mut self, x: &RealArray, gy: &RealArray) -> Result<RealArray> {
        check_cols(x, 2 * self.d, "gradient module")?;
        x.check_same(gy, "gradient module cotangent")?;
        let (p, q) = x.split_cols(self.d);
        let (mut gp, mut gq) = gy.split_cols(self.d);
        let driver = if self.side == Side::Up { &q } else { &p };
        let (_, s) = self.potential().forward(driver, None);
        let mut ga = RealArray::zeros(&[self.width]);
        let mut gb = RealArray::zeros(&[self.width]);
        let mut gk = RealArray::zeros(&[self.width, self.d]);
        let gu = if self.side == Side::Up { &gp } else { &gq };
        let (gdriver, _) = self
            .potential()
            .backward(driver, None, &s, gu, &mut ga, &mut gb, &mut gk, None);
        match self.side {
            Side::Up => gq.axpy(1.0, &gdriver)?,
            Side::Low => gp.axpy(1.0, &gdriver)?,
        }
        self.params.grad_mut("a").axpy(1.0, &ga)?;
        self.params.grad_mut("b").axpy(1.0, &gb)?;
        self.params.grad_mut("k").axpy(1.0, &gk)?;
        Ok(join3(&gp, &gq, None, x))
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        f(&self.params)
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        f(&mut self.params)
    }
}

/// Gradient module whose potential also reads the trailing coordinates `c`,
/// which pass through unchanged:
/// `up: p ← p + K₁ᵀ(a⊙σ(K₁q + K₂c + b))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedModule {
    n: usize,
    d: usize,
    width: usize,
    side: Side,
    act: Activation,
    params: ParamSet,
}

impl ExtendedModule {
    pub fn new(n: usize, d: usize, width: usize, side: Side, act: Activation, rng: &mut SeededRng) -> Result<Self> {
        if d == 0 || 2 * d > n {
            return Err(Error::invalid(format!(
                "extended module needs 0 < 2d <= n, got d = {d}, n = {n}"
            )));
        }
        let mut params = ParamSet::new().with("k1", rng.glorot(width, d));
        if n > 2 * d {
            params = params.with("k2", rng.glorot(width, n - 2 * d));
        }
        params = params
            .with("a", RealArray::zeros(&[width]))
            .with("b", RealArray::zeros(&[width]));
        Ok(Self {
            n,
            d,
            width,
            side,
            act,
            params,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn potential(&self) -> Potential<'_> {
        Potential {
            act: self.act,
            k1: self.params.value("k1"),
            k2: self.params.get("k2").map(|p| &p.value),
            a: self.params.value("a").data(),
            b: self.params.value("b").data(),
        }
    }

    pub fn to_doc(&self) -> ModuleDoc {
        ModuleDoc::new("extended")
            .side(self.side)
            .activation(self.act)
            .dim("n", self.n)
            .dim("d", self.d)
            .dim("width", self.width)
            .params(&self.params)
    }

    pub fn from_doc(doc: &ModuleDoc) -> Result<Self> {
        doc.expect_kind("extended")?;
        let mut m = Self::new(
            doc.get_dim("n")?,
            doc.get_dim("d")?,
            doc.get_dim("width")?,
            doc.get_side()?,
            doc.activation.unwrap_or_default(),
            &mut crate::numcore::seeded_rng(0),
        )?;
        m.params.load_values(&doc.params)?;
        Ok(m)
    }
}

impl DifferentiableLayer for ExtendedModule {
    fn forward(&self, x: &RealArray) -> Result<RealArray> {
        check_cols(x, self.n, "extended module")?;
        let (mut p, mut q, c) = split3(x, self.d);
        match self.side {
            Side::Up => p.axpy(1.0, &self.potential().forward(&q, c.as_ref()).0)?,
            Side::Low => q.axpy(1.0, &self.potential().forward(&p, c.as_ref()).0)?,
        }
        Ok(join3(&p, &q, c.as_ref(), x))
    }

    fn backward(&mut self, x: &RealArray, gy: &RealArray) -> Result<RealArray> {
        check_cols(x, self.n, "extended module")?;
        x.check_same(gy, "extended module cotangent")?;
        let (p, q, c) = split3(x, self.d);
        let (mut gp, mut gq, gc) = split3(gy, self.d);
        let driver = if self.side == Side::Up { &q } else { &p };
        let (_, s) = self.potential().forward(driver, c.as_ref());
        let mut ga = RealArray::zeros(&[self.width]);
        let mut gb = RealArray::zeros(&[self.width]);
        let mut gk1 = RealArray::zeros(&[self.width, self.d]);
        let mut gk2 = c.as_ref().map(|c| RealArray::zeros(&[self.width, c.cols()]));
        let gu = if self.side == Side::Up { &gp } else { &gq };
        let (gdriver, gc_extra) =
            self.potential()
                .backward(driver, c.as_ref(), &s, gu, &mut ga, &mut gb, &mut gk1, gk2.as_mut());
        match self.side {
            Side::Up => gq.axpy(1.0, &gdriver)?,
            Side::Low => gp.axpy(1.0, &gdriver)?,
        }
        let gc = match (gc, gc_extra) {
            (Some(mut gc), Some(extra)) => {
                gc.axpy(1.0, &extra)?;
                Some(gc)
            }
            (gc, _) => gc,
        };
        self.params.grad_mut("a").axpy(1.0, &ga)?;
        self.params.grad_mut("b").axpy(1.0, &gb)?;
        self.params.grad_mut("k1").axpy(1.0, &gk1)?;
        if let Some(gk2) = gk2 {
            self.params.grad_mut("k2").axpy(1.0, &gk2)?;
        }
        Ok(join3(&gp, &gq, gc.as_ref(), x))
    }

    fn visit_params(&self, f: &mut dyn FnMut(&ParamSet)) {
        f(&self.params)
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut ParamSet)) {
        f(&mut self.params)
    }
}
