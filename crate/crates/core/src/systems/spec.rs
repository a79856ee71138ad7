use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::RealArray;

/// Benchmark systems. Every variant provides its field, Poisson matrix
/// `B`, Hamiltonian and a transformation to canonical coordinates
/// `(p₁..p_d, q₁..q_d, c…)` in which `ṗ = −K_q`, `q̇ = K_p`, `ċ = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `u̇ = u(v−2)`, `v̇ = v(1−u)` on the open positive quadrant.
    LotkaVolterra,
    /// `(p, q)` with `H = p²/2 − cos q`.
    Pendulum,
    /// Pendulum with a Casimir, seen through `(u,v,r) = (p, q, p²+q²+c)`.
    ExtendedPendulum,
    /// Charged particle (`m = q = 1`) in state `(v, x)`; planar (4-dim)
    /// unless `full`, which keeps the third components (6-dim).
    Lorentz {
        #[serde(default)]
        full: bool,
    },
    /// Ablowitz–Ladik lattice with `sites` points, state `(u₁..u_N, v₁..v_N)`.
    AblowitzLadik { sites: usize },
    /// `H = (p² + q²)/2`.
    HarmonicOscillator,
    /// Planar gravitational two-body problem, state
    /// `(p₁, p₂, q₁, q₂)` with each a 2-vector.
    TwoBody { masses: [f64; 2], gravity: f64 },
}

impl SystemSpec {
    pub fn two_body_default() -> Self {
        SystemSpec::TwoBody {
            masses: [1.0, 1.0],
            gravity: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::LotkaVolterra => "lotka_volterra",
            SystemSpec::Pendulum => "pendulum",
            SystemSpec::ExtendedPendulum => "extended_pendulum",
            SystemSpec::Lorentz { .. } => "lorentz",
            SystemSpec::AblowitzLadik { .. } => "ablowitz_ladik",
            SystemSpec::HarmonicOscillator => "harmonic_oscillator",
            SystemSpec::TwoBody { .. } => "two_body",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SystemSpec::LotkaVolterra | SystemSpec::Pendulum | SystemSpec::HarmonicOscillator => 2,
            SystemSpec::ExtendedPendulum => 3,
            SystemSpec::Lorentz { full } => {
                if *full {
                    6
                } else {
                    4
                }
            }
            SystemSpec::AblowitzLadik { sites } => 2 * sites,
            SystemSpec::TwoBody { .. } => 8,
        }
    }

    /// Rank `2d` of `B`; the remaining `n − 2d` canonical coordinates are
    /// Casimirs.
    pub fn rank(&self) -> usize {
        match self {
            SystemSpec::ExtendedPendulum => 2,
            other => other.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SystemSpec::AblowitzLadik { sites } if sites < 3 => {
                Err(Error::invalid("the Ablowitz–Ladik lattice needs at least 3 sites"))
            }
            SystemSpec::TwoBody { masses, gravity } if !(masses.iter().all(|m| *m > 0.0) && gravity > 0.0) => {
                Err(Error::invalid("two-body masses and gravity must be positive"))
            }
            _ => Ok(()),
        }
    }

    fn check_len(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::dims(self.name(), self.dim(), y.len()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(self.name(), "state has non-finite entries"));
        }
        Ok(())
    }

    /// Rejects states outside the admissible domain.
    pub fn check_domain(&self, y: &[f64]) -> Result<()> {
        self.check_len(y)?;
        match self {
            SystemSpec::LotkaVolterra if !(y[0] > 0.0 && y[1] > 0.0) => Err(Error::domain(
                self.name(),
                format!("state ({}, {}) outside the open positive quadrant", y[0], y[1]),
            )),
            SystemSpec::Lorentz { full } => {
                let k = if *full { 3 } else { 2 };
                if y[k].hypot(y[k + 1]) < 1e-12 {
                    Err(Error::domain(self.name(), "potential singular at x₁ = x₂ = 0"))
                } else {
                    Ok(())
                }
            }
            SystemSpec::TwoBody { .. } => {
                if (y[4] - y[6]).hypot(y[5] - y[7]) < 1e-12 {
                    Err(Error::domain(self.name(), "bodies collide"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// `ẏ = f(y)`, written from each system's own equations of motion.
    pub fn field(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(y)?;
        Ok(match *self {
            SystemSpec::LotkaVolterra => vec![y[0] * (y[1] - 2.0), y[1] * (1.0 - y[0])],
            SystemSpec::Pendulum => vec![-y[1].sin(), y[0]],
            SystemSpec::HarmonicOscillator => vec![-y[1], y[0]],
            SystemSpec::ExtendedPendulum => {
                // ṗ = −sin q, q̇ = p + c, ċ = 0 pushed through (u, v, r) = (p, q, p²+q²+c).
                let (u, v, r) = (y[0], y[1], y[2]);
                let c = r - u * u - v * v;
                let (du, dv) = (-v.sin(), u + c);
                vec![du, dv, 2.0 * u * du + 2.0 * v * dv]
            }
            SystemSpec::Lorentz { full } => {
                let k = if full { 3 } else { 2 };
                let (x1, x2) = (y[k], y[k + 1]);
                let rho = x1.hypot(x2);
                let e = 1.0 / (100.0 * rho.powi(3));
                // v̇ = E + v × B with B = (0, 0, ρ).
                let mut f = vec![0.0; self.dim()];
                f[0] = e * x1 + y[1] * rho;
                f[1] = e * x2 - y[0] * rho;
                f[k..].copy_from_slice(&y[..k]);
                f
            }
            SystemSpec::AblowitzLadik { sites } => {
                let n = sites;
                let inv_dx2 = (n * n) as f64;
                let (u, v) = y.split_at(n);
                let mut f = vec![0.0; 2 * n];
                for k in 0..n {
                    let (kp, km) = ((k + 1) % n, (k + n - 1) % n);
                    let w2 = u[k] * u[k] + v[k] * v[k];
                    f[k] = -inv_dx2 * (v[kp] - 2.0 * v[k] + v[km]) - w2 * (v[kp] + v[km]);
                    f[n + k] = inv_dx2 * (u[kp] - 2.0 * u[k] + u[km]) + w2 * (u[kp] + u[km]);
                }
                f
            }
            SystemSpec::TwoBody { masses, gravity } => {
                let (dx, dy) = (y[4] - y[6], y[5] - y[7]);
                let r3 = dx.hypot(dy).powi(3);
                let s = gravity * masses[0] * masses[1] / r3;
                vec![
                    -s * dx,
                    -s * dy,
                    s * dx,
                    s * dy,
                    y[0] / masses[0],
                    y[1] / masses[0],
                    y[2] / masses[1],
                    y[3] / masses[1],
                ]
            }
        })
    }

    /// Structure matrix `B(y)` with `f = B ∇H`.
    pub fn structure(&self, y: &[f64]) -> Result<RealArray> {
        self.check_domain(y)?;
        let n = self.dim();
        let mut b = vec![0.0; n * n];
        let mut set = |i: usize, j: usize, v: f64| {
            b[i * n + j] = v;
            b[j * n + i] = -v;
        };
        match *self {
            SystemSpec::LotkaVolterra => set(0, 1, y[0] * y[1]),
            SystemSpec::ExtendedPendulum => {
                let (u, v) = (y[0], y[1]);
                set(0, 1, -1.0);
                set(0, 2, -2.0 * v);
                set(1, 2, 2.0 * u);
            }
            SystemSpec::Lorentz { full } => {
                let k = if full { 3 } else { 2 };
                set(0, 1, y[k].hypot(y[k + 1]));
                for i in 0..k {
                    set(i, k + i, -1.0);
                }
            }
            SystemSpec::AblowitzLadik { sites } => {
                let dx2 = 1.0 / (sites * sites) as f64;
                for k in 0..sites {
                    let d = 1.0 + dx2 * (y[k] * y[k] + y[sites + k] * y[sites + k]);
                    set(k, sites + k, -d);
                }
            }
            SystemSpec::Pendulum | SystemSpec::HarmonicOscillator | SystemSpec::TwoBody { .. } => {
                let d = n / 2;
                for i in 0..d {
                    set(i, d + i, -1.0);
                }
            }
        }
        Ok(RealArray::matrix(n, n, b))
    }

    pub fn hamiltonian(&self, y: &[f64]) -> Result<f64> {
        self.check_domain(y)?;
        Ok(match *self {
            SystemSpec::LotkaVolterra => y[0] - y[0].ln() + y[1] - 2.0 * y[1].ln(),
            SystemSpec::Pendulum => 0.5 * y[0] * y[0] - y[1].cos(),
            SystemSpec::HarmonicOscillator => 0.5 * (y[0] * y[0] + y[1] * y[1]),
            SystemSpec::ExtendedPendulum => {
                let (u, v, r) = (y[0], y[1], y[2]);
                0.5 * u * u - v.cos() + u * r - u.powi(3) - u * v * v
            }
            SystemSpec::Lorentz { full } => {
                let k = if full { 3 } else { 2 };
                let kinetic: f64 = y[..k].iter().map(|v| v * v).sum::<f64>() * 0.5;
                kinetic + 1.0 / (100.0 * y[k].hypot(y[k + 1]))
            }
            SystemSpec::AblowitzLadik { sites } => {
                let n = sites;
                let dx2 = 1.0 / (n * n) as f64;
                let (u, v) = y.split_at(n);
                let mut coupling = 0.0;
                let mut log = 0.0;
                for l in 0..n {
                    let lm = (l + n - 1) % n;
                    coupling += u[l] * u[lm] + v[l] * v[lm];
                    log += (dx2 * (u[l] * u[l] + v[l] * v[l])).ln_1p();
                }
                coupling / dx2 - log / (dx2 * dx2)
            }
            SystemSpec::TwoBody { masses, gravity } => {
                let kinetic =
                    (y[0] * y[0] + y[1] * y[1]) / (2.0 * masses[0]) + (y[2] * y[2] + y[3] * y[3]) / (2.0 * masses[1]);
                kinetic - gravity * masses[0] * masses[1] / (y[4] - y[6]).hypot(y[5] - y[7])
            }
        })
    }

    pub fn grad_hamiltonian(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(y)?;
        Ok(match *self {
            SystemSpec::LotkaVolterra => vec![1.0 - 1.0 / y[0], 1.0 - 2.0 / y[1]],
            SystemSpec::Pendulum => vec![y[0], y[1].sin()],
            SystemSpec::HarmonicOscillator => vec![y[0], y[1]],
            SystemSpec::ExtendedPendulum => {
                let (u, v, r) = (y[0], y[1], y[2]);
                vec![u - 3.0 * u * u - v * v + r, v.sin() - 2.0 * u * v, u]
            }
            SystemSpec::Lorentz { full } => {
                let k = if full { 3 } else { 2 };
                let (x1, x2) = (y[k], y[k + 1]);
                let e = 1.0 / (100.0 * x1.hypot(x2).powi(3));
                let mut g = y[..k].to_vec();
                g.extend([-e * x1, -e * x2]);
                if full {
                    g.push(0.0);
                }
                g
            }
            SystemSpec::AblowitzLadik { sites } => {
                let n = sites;
                let inv_dx2 = (n * n) as f64;
                let dx2 = 1.0 / inv_dx2;
                let (u, v) = y.split_at(n);
                let mut g = vec![0.0; 2 * n];
                for k in 0..n {
                    let (kp, km) = ((k + 1) % n, (k + n - 1) % n);
                    let d = 1.0 + dx2 * (u[k] * u[k] + v[k] * v[k]);
                    g[k] = inv_dx2 * (u[kp] + u[km]) - 2.0 * inv_dx2 * u[k] / d;
                    g[n + k] = inv_dx2 * (v[kp] + v[km]) - 2.0 * inv_dx2 * v[k] / d;
                }
                g
            }
            SystemSpec::TwoBody { masses, gravity } => {
                let (dx, dy) = (y[4] - y[6], y[5] - y[7]);
                let s = gravity * masses[0] * masses[1] / dx.hypot(dy).powi(3);
                vec![
                    y[0] / masses[0],
                    y[1] / masses[0],
                    y[2] / masses[1],
                    y[3] / masses[1],
                    s * dx,
                    s * dy,
                    -s * dx,
                    -s * dy,
                ]
            }
        })
    }

    /// `y ↦ z = (p, q, c)`.
    pub fn to_canonical(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_domain(y)?;
        Ok(match *self {
            SystemSpec::LotkaVolterra => vec![y[0].ln(), y[1].ln()],
            SystemSpec::ExtendedPendulum => {
                vec![y[0], y[1], y[2] - y[0] * y[0] - y[1] * y[1]]
            }
            SystemSpec::Lorentz { full } => {
                let k = if full { 3 } else { 2 };
                let a = vector_potential(y[k], y[k + 1]);
                let mut z = y.to_vec();
                z[0] += a[0];
                z[1] += a[1];
                z
            }
            SystemSpec::AblowitzLadik { sites } => {
                let dx2 = 1.0 / (sites * sites) as f64;
                let mut z = y.to_vec();
                for k in 0..sites {
                    let s = al_sigma(dx2 * (y[k] * y[k] + y[sites + k] * y[sites + k]));
                    z[k] *= s;
                    z[sites + k] *= s;
                }
                z
            }
            SystemSpec::Pendulum | SystemSpec::HarmonicOscillator | SystemSpec::TwoBody { .. } => y.to_vec(),
        })
    }

    /// Inverse of [`to_canonical`](Self::to_canonical).
    pub fn from_canonical(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        let y = match *self {
            SystemSpec::LotkaVolterra => vec![z[0].exp(), z[1].exp()],
            SystemSpec::ExtendedPendulum => vec![z[0], z[1], z[2] + z[0] * z[0] + z[1] * z[1]],
            SystemSpec::Lorentz { full } => {
                let k = if full { 3 } else { 2 };
                let a = vector_potential(z[k], z[k + 1]);
                let mut y = z.to_vec();
                y[0] -= a[0];
                y[1] -= a[1];
                y
            }
            SystemSpec::AblowitzLadik { sites } => {
                let dx2 = 1.0 / (sites * sites) as f64;
                let mut y = z.to_vec();
                for k in 0..sites {
                    let t = al_tau(dx2 * (z[k] * z[k] + z[sites + k] * z[sites + k]));
                    y[k] *= t;
                    y[sites + k] *= t;
                }
                y
            }
            SystemSpec::Pendulum | SystemSpec::HarmonicOscillator | SystemSpec::TwoBody { .. } => z.to_vec(),
        };
        self.check_domain(&y)?;
        Ok(y)
    }

    /// Hamiltonian `K(z)` of the canonical system.
    ///
    /// For Lotka–Volterra this is `p − eᵖ + 2q − e^q = −H(u, v)`: with
    /// `(p, q) = (ln u, ln v)` the flow reads `ṗ = −K_q`, `q̇ = K_p` only for
    /// the negated Hamiltonian. Every other system has `K(z) = H(y)`.
    pub fn canonical_hamiltonian(&self, z: &[f64]) -> Result<f64> {
        self.check_len(z)?;
        match *self {
            SystemSpec::LotkaVolterra => Ok(z[0] - z[0].exp() + 2.0 * z[1] - z[1].exp()),
            SystemSpec::ExtendedPendulum => {
                let (p, q, c) = (z[0], z[1], z[2]);
                Ok(0.5 * p * p - q.cos() + p * c)
            }
            SystemSpec::Lorentz { full } => {
                let k = if full { 3 } else { 2 };
                let a = vector_potential(z[k], z[k + 1]);
                let mut kinetic = (z[0] - a[0]).powi(2) + (z[1] - a[1]).powi(2);
                if full {
                    kinetic += z[2] * z[2];
                }
                let rho = z[k].hypot(z[k + 1]);
                if rho < 1e-12 {
                    return Err(Error::domain(self.name(), "potential singular at x₁ = x₂ = 0"));
                }
                Ok(0.5 * kinetic + 1.0 / (100.0 * rho))
            }
            SystemSpec::AblowitzLadik { sites } => {
                let n = sites;
                let dx2 = 1.0 / (n * n) as f64;
                let (p, q) = z.split_at(n);
                let tau: Vec<f64> = (0..n).map(|l| al_tau(dx2 * (p[l] * p[l] + q[l] * q[l]))).collect();
                let mut coupling = 0.0;
                let mut norm = 0.0;
                for l in 0..n {
                    let lm = (l + n - 1) % n;
                    coupling += tau[l] * tau[lm] * (p[l] * p[lm] + q[l] * q[lm]);
                    norm += p[l] * p[l] + q[l] * q[l];
                }
                Ok((coupling - norm) / dx2)
            }
            _ => self.hamiltonian(z),
        }
    }

    /// `∇K(z)`.
    pub fn canonical_grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        match *self {
            SystemSpec::LotkaVolterra => Ok(vec![1.0 - z[0].exp(), 2.0 - z[1].exp()]),
            SystemSpec::ExtendedPendulum => Ok(vec![z[0] + z[2], z[1].sin(), z[0]]),
            SystemSpec::Lorentz { full } => {
                let k = if full { 3 } else { 2 };
                let (x1, x2) = (z[k], z[k + 1]);
                let rho = x1.hypot(x2);
                if rho < 1e-12 {
                    return Err(Error::domain(self.name(), "potential singular at x₁ = x₂ = 0"));
                }
                let a = vector_potential(x1, x2);
                let (w1, w2) = (z[0] - a[0], z[1] - a[1]);
                // ∂A/∂x for A = ρ/3 · (−x₂, x₁).
                let da1 = [-x1 * x2 / (3.0 * rho), -(rho + x2 * x2 / rho) / 3.0];
                let da2 = [(rho + x1 * x1 / rho) / 3.0, x1 * x2 / (3.0 * rho)];
                let e = 1.0 / (100.0 * rho.powi(3));
                let mut g = vec![0.0; self.dim()];
                g[0] = w1;
                g[1] = w2;
                if full {
                    g[2] = z[2];
                }
                g[k] = -(w1 * da1[0] + w2 * da2[0]) - e * x1;
                g[k + 1] = -(w1 * da1[1] + w2 * da2[1]) - e * x2;
                Ok(g)
            }
            SystemSpec::AblowitzLadik { sites } => {
                // ∇K = (∂y/∂z)ᵀ ∇H(y); the inverse map acts site by site.
                let n = sites;
                let dx2 = 1.0 / (n * n) as f64;
                let y = self.from_canonical(z)?;
                let gh = self.grad_hamiltonian(&y)?;
                let mut g = vec![0.0; 2 * n];
                for k in 0..n {
                    let (p, q) = (z[k], z[n + k]);
                    let rho = dx2 * (p * p + q * q);
                    let (t, dt) = (al_tau(rho), al_tau_deriv(rho));
                    // u = p τ(ρ), v = q τ(ρ), ∂ρ/∂p = 2Δx² p.
                    let dup = t + 2.0 * dx2 * p * p * dt;
                    let duq = 2.0 * dx2 * p * q * dt;
                    let dvq = t + 2.0 * dx2 * q * q * dt;
                    g[k] = dup * gh[k] + duq * gh[n + k];
                    g[n + k] = duq * gh[k] + dvq * gh[n + k];
                }
                Ok(g)
            }
            _ => self.grad_hamiltonian(z),
        }
    }

    /// Right-hand side of the canonical system, `(−K_q, K_p, 0)`.
    pub fn canonical_field(&self, z: &[f64]) -> Result<Vec<f64>> {
        let g = self.canonical_grad(z)?;
        let d = self.rank() / 2;
        let mut f = vec![0.0; z.len()];
        for i in 0..d {
            f[i] = -g[d + i];
            f[d + i] = g[i];
        }
        Ok(f)
    }

    /// Training initial condition for the Ablowitz–Ladik lattice:
    /// `u = 2 + 0.2 cos(2πx)`, `v = 0` at `x = kΔx`.
    pub fn al_initial_state(sites: usize) -> Vec<f64> {
        let mut y = vec![0.0; 2 * sites];
        for (k, u) in y[..sites].iter_mut().enumerate() {
            let x = k as f64 / sites as f64;
            *u = 2.0 + 0.2 * (2.0 * std::f64::consts::PI * x).cos();
        }
        y
    }

    /// Two-body state at periapsis of a Kepler orbit with semi-major axis
    /// `a` and eccentricity `e`, centre of mass at rest at the origin.
    pub fn two_body_periapsis(&self, a: f64, e: f64) -> Result<Vec<f64>> {
        let SystemSpec::TwoBody { masses, gravity } = *self else {
            return Err(Error::invalid(
                "periapsis state is defined for the two-body system only",
            ));
        };
        if !(a > 0.0 && (0.0..1.0).contains(&e)) {
            return Err(Error::invalid("orbit needs a > 0 and 0 ≤ e < 1"));
        }
        let total = masses[0] + masses[1];
        let rp = a * (1.0 - e);
        let vp = (gravity * total * (1.0 + e) / rp).sqrt();
        let (f1, f2) = (masses[1] / total, masses[0] / total);
        Ok(vec![
            0.0,
            masses[0] * f1 * vp,
            0.0,
            -masses[1] * f2 * vp,
            f1 * rp,
            0.0,
            -f2 * rp,
            0.0,
        ])
    }

    /// Kepler period `2π √(a³ / G(m₁+m₂))`.
    pub fn two_body_period(&self, a: f64) -> Option<f64> {
        match *self {
            SystemSpec::TwoBody { masses, gravity } => {
                Some(2.0 * std::f64::consts::PI * (a.powi(3) / (gravity * (masses[0] + masses[1]))).sqrt())
            }
            _ => None,
        }
    }
}

/// `A(x) = ⅓ √(x₁² + x₂²) · (−x₂, x₁, 0)`, first two components.
pub fn vector_potential(x1: f64, x2: f64) -> [f64; 2] {
    let s = x1.hypot(x2) / 3.0;
    [-s * x2, s * x1]
}

/// `σ(x) = √(ln(1+x)/x)`, continuous at 0.
pub fn al_sigma(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        (1.0 - x / 2.0).sqrt()
    } else {
        (x.ln_1p() / x).sqrt()
    }
}

/// `τ(x) = √((eˣ − 1)/x)`, the inverse scaling of [`al_sigma`].
pub fn al_tau(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        (1.0 + x / 2.0).sqrt()
    } else {
        (x.exp_m1() / x).sqrt()
    }
}

/// `τ'(x)`.
fn al_tau_deriv(x: f64) -> f64 {
    // g = (eˣ−1)/x, τ = √g, τ' = g'/(2τ).
    let gp = if x.abs() < 1e-3 {
        0.5 + x / 3.0 + x * x / 8.0 + x.powi(3) / 30.0
    } else {
        (x * x.exp() - x.exp_m1()) / (x * x)
    };
    gp / (2.0 * al_tau(x))
}
