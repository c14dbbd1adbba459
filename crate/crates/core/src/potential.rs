//! Potentials V on the half-line, their admissibility checks, and U = -2V - xV'.

use crate::error::{Error, Result};
use crate::integrator::{integrate, Tolerance};
use crate::numerics::{fit_line, logspace};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Large-x behaviour of V, which decides how Jost solutions are seeded and
/// which basis the zero-energy fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// V ~ -1/(4x^2)
    InverseSquare,
    /// V decays faster than any inverse square (or vanishes).
    ShortRange,
}

/// Potential description as it appears in a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// V(x) = -(x^2 - core) / (4 (1 + x^2)^2)
    Model {
        #[serde(default = "default_core")]
        core: f64,
    },
    /// V(x) = -1/(4x^2) for x >= x_cut, smoothly switched off below x_cut/2.
    Tail {
        #[serde(default = "default_cut")]
        x_cut: f64,
    },
    /// V(x) = -depth sech^2(x)
    PoschlTeller {
        #[serde(default = "default_depth")]
        depth: f64,
    },
    /// Natural cubic spline through samples starting at x = 0, continued as
    /// an inverse square beyond the last sample.
    Table {
        x: Vec<f64>,
        v: Vec<f64>,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
}

fn default_core() -> f64 {
    4.0
}
fn default_cut() -> f64 {
    1.0
}
fn default_depth() -> f64 {
    2.0
}
fn default_alpha() -> f64 {
    2.0
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Form {
    Zero,
    Model(f64),
    Tail(f64),
    PoschlTeller(f64),
    Table(Spline),
    Custom {
        v: ScalarFn,
        dv: ScalarFn,
        d2v: ScalarFn,
    },
}

/// An immutable potential with analytic (or stencil) derivatives.
#[derive(Clone)]
pub struct Potential {
    form: Form,
    name: String,
    pub alpha: f64,
    pub even_extension: bool,
    pub tail: TailKind,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("even_extension", &self.even_extension)
            .field("tail", &self.tail)
            .finish()
    }
}

impl Potential {
    pub fn zero() -> Self {
        Potential {
            form: Form::Zero,
            name: "zero".into(),
            alpha: f64::INFINITY,
            even_extension: true,
            tail: TailKind::ShortRange,
        }
    }

    pub fn model(core: f64) -> Self {
        Potential {
            form: Form::Model(core),
            name: format!("model(core={core})"),
            alpha: 2.0,
            even_extension: true,
            tail: TailKind::InverseSquare,
        }
    }

    pub fn tail(x_cut: f64) -> Self {
        Potential {
            form: Form::Tail(x_cut),
            name: format!("tail(x_cut={x_cut})"),
            alpha: f64::INFINITY,
            even_extension: true,
            tail: TailKind::InverseSquare,
        }
    }

    pub fn poschl_teller(depth: f64) -> Self {
        Potential {
            form: Form::PoschlTeller(depth),
            name: format!("poschl_teller(depth={depth})"),
            alpha: f64::INFINITY,
            even_extension: true,
            tail: TailKind::ShortRange,
        }
    }

    pub fn table(x: Vec<f64>, v: Vec<f64>, alpha: f64) -> Result<Self> {
        let spline = Spline::natural(x, v)?;
        let p = Potential {
            form: Form::Table(spline),
            name: "table".into(),
            alpha,
            even_extension: false,
            tail: TailKind::InverseSquare,
        };
        let slope0 = p.deriv(0.0);
        let even = slope0.abs() <= 1e-6 * (1.0 + p.eval(0.0).abs());
        Ok(Potential {
            even_extension: even,
            ..p
        })
    }

    /// Arbitrary closed form with caller-supplied derivatives.
    pub fn custom<F, G, H>(name: &str, v: F, dv: G, d2v: H, alpha: f64, tail: TailKind) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Potential {
            form: Form::Custom {
                v: Arc::new(v),
                dv: Arc::new(dv),
                d2v: Arc::new(d2v),
            },
            name: name.into(),
            alpha,
            even_extension: false,
            tail,
        }
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        match spec {
            PotentialSpec::Zero => Ok(Self::zero()),
            PotentialSpec::Model { core } => Ok(Self::model(*core)),
            PotentialSpec::Tail { x_cut } => {
                if *x_cut <= 0.0 {
                    return Err(Error::InvalidArgument("x_cut must be positive".into()));
                }
                Ok(Self::tail(*x_cut))
            }
            PotentialSpec::PoschlTeller { depth } => Ok(Self::poschl_teller(*depth)),
            PotentialSpec::Table { x, v, alpha } => Self::table(x.clone(), v.clone(), *alpha),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.form, Form::Zero)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        match &self.form {
            Form::Zero => 0.0,
            Form::Model(c) => {
                let s = 1.0 + ax * ax;
                -0.25 * (ax * ax - c) / (s * s)
            }
            Form::Tail(xc) => {
                if ax <= 0.5 * xc {
                    0.0
                } else {
                    -0.25 * smooth_step(ax, *xc).0 / (ax * ax)
                }
            }
            Form::PoschlTeller(d) => {
                let s = 1.0 / ax.cosh();
                -d * s * s
            }
            Form::Table(sp) => sp.eval(ax),
            Form::Custom { v, .. } => v(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let ax = x.abs();
        let sg = if x < 0.0 { -1.0 } else { 1.0 };
        let d = match &self.form {
            Form::Zero => 0.0,
            Form::Model(c) => {
                let s = 1.0 + ax * ax;
                -0.5 * ax * (1.0 + 2.0 * c - ax * ax) / (s * s * s)
            }
            Form::Tail(xc) => {
                if ax <= 0.5 * xc {
                    0.0
                } else {
                    let (chi, dchi, _) = smooth_step(ax, *xc);
                    -0.25 * (-2.0 * chi / ax.powi(3) + dchi / (ax * ax))
                }
            }
            Form::PoschlTeller(d) => {
                let s = 1.0 / ax.cosh();
                2.0 * d * s * s * ax.tanh()
            }
            Form::Table(sp) => stencil(|y| sp.eval(y.abs()), ax, 1),
            Form::Custom { dv, .. } => return dv(x),
        };
        sg * d
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let ax = x.abs();
        match &self.form {
            Form::Zero => 0.0,
            Form::Model(c) => {
                let s = 1.0 + ax * ax;
                let g = -0.5 * ((1.0 + 2.0 * c) * ax - ax.powi(3));
                let dg = -0.5 * ((1.0 + 2.0 * c) - 3.0 * ax * ax);
                (dg * s - 6.0 * ax * g) / s.powi(4)
            }
            Form::Tail(xc) => {
                if ax <= 0.5 * xc {
                    0.0
                } else {
                    let (chi, dchi, d2chi) = smooth_step(ax, *xc);
                    -0.25
                        * (6.0 * chi / ax.powi(4) - 4.0 * dchi / ax.powi(3)
                            + d2chi / (ax * ax))
                }
            }
            Form::PoschlTeller(d) => {
                let s = 1.0 / ax.cosh();
                let t = ax.tanh();
                2.0 * d * s * s * (s * s - 2.0 * t * t)
            }
            Form::Table(sp) => stencil(|y| sp.eval(y.abs()), ax, 2),
            Form::Custom { d2v, .. } => d2v(x),
        }
    }
}

/// C-infinity switch from 0 at x_cut/2 to 1 at x_cut, with first and second derivatives.
fn smooth_step(x: f64, x_cut: f64) -> (f64, f64, f64) {
    let a0 = 0.5 * x_cut;
    let width = x_cut - a0;
    if x <= a0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= x_cut {
        return (1.0, 0.0, 0.0);
    }
    let s = (x - a0) / width;
    let g = |u: f64| (-1.0 / u).exp();
    let g1 = |u: f64| g(u) / (u * u);
    let g2 = |u: f64| g(u) * (1.0 / u.powi(4) - 2.0 / u.powi(3));
    let (a, b) = (g(s), g(1.0 - s));
    let (a1, b1) = (g1(s), -g1(1.0 - s));
    let (a2, b2) = (g2(s), g2(1.0 - s));
    let den = a + b;
    let psi = a / den;
    let num1 = a1 * b - a * b1;
    let dpsi = num1 / (den * den);
    let d2psi = ((a2 * b - a * b2) * den - 2.0 * num1 * (a1 + b1)) / den.powi(3);
    (psi, dpsi / width, d2psi / (width * width))
}

fn stencil<F: Fn(f64) -> f64>(f: F, x: f64, order: usize) -> f64 {
    let h = 1e-3;
    match order {
        1 => (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h),
        _ => {
            (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h)
                - f(x + 2.0 * h))
                / (12.0 * h * h)
        }
    }
}

#[derive(Debug, Clone)]
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 4 || y.len() != n {
            return Err(Error::InvalidArgument(
                "table needs at least 4 samples with matching lengths".into(),
            ));
        }
        if x[0] != 0.0 || x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "table abscissae must start at 0 and increase".into(),
            ));
        }
        // tridiagonal solve for second derivatives
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let r = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Spline { x, y, m })
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let xe = self.x[n - 1];
        if t >= xe {
            return self.y[n - 1] * (xe / t).powi(2);
        }
        let k = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - t) / h;
        let b = (t - self.x[k]) / h;
        a * self.y[k]
            + b * self.y[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }
}

/// U(x) = -2V(x) - x V'(x).
pub fn eval_u(pot: &Potential, x: f64) -> f64 {
    -2.0 * pot.eval(x) - x * pot.deriv(x)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub x: Vec<f64>,
    pub ratios: Vec<f64>,
    /// None when the tail is exactly -1/(4x^2) on the whole window.
    pub fitted_alpha: Option<f64>,
    pub exact_tail: bool,
}

/// Sample -4x^2 V(x) on a log grid and fit the decay rate of its deviation from 1.
pub fn check_tail(pot: &Potential, x_min: f64, x_max: f64, n: usize) -> Result<TailReport> {
    if !(x_min >= 1.0 && x_max > x_min && n >= 8) {
        return Err(Error::InvalidArgument(
            "check_tail needs 1 <= x_min < x_max and n >= 8".into(),
        ));
    }
    let x = logspace(x_min, x_max, n);
    let ratios: Vec<f64> = x.iter().map(|&t| -4.0 * t * t * pot.eval(t)).collect();
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let floor = 1e-13;
    if dev.iter().all(|&d| d < floor) {
        return Ok(TailReport {
            x,
            ratios,
            fitted_alpha: None,
            exact_tail: true,
        });
    }
    let top = x_max / 10.0;
    let idx: Vec<usize> = (0..n).filter(|&i| x[i] >= top).collect();
    for w in idx.windows(2) {
        let (a, b) = (dev[w[0]], dev[w[1]]);
        if b > floor && b > 1.1 * a {
            return Err(Error::NonDecayingTail(format!(
                "|-4x^2V - 1| grows from {a:e} at x = {} to {b:e} at x = {}",
                x[w[0]], x[w[1]]
            )));
        }
    }
    let (lx, ld): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(&dev)
        .filter(|(_, &d)| d > floor)
        .map(|(t, d)| (t.ln(), d.ln()))
        .unzip();
    let fitted_alpha = fit_line(&lx, &ld).map(|f| -f.slope);
    Ok(TailReport {
        x,
        ratios,
        fitted_alpha,
        exact_tail: false,
    })
}

/// Number of zeros of the Neumann solution of -f'' + V f = E f on (0, x_max),
/// from the Prüfer angle.
pub fn node_count(pot: &Potential, energy: f64, x_max: f64, tol: Tolerance) -> Result<usize> {
    let theta = integrate(
        |x, y: &[f64; 1], dy: &mut [f64; 1]| {
            let (s, c) = y[0].sin_cos();
            dy[0] = c * c - (pot.eval(x) - energy) * s * s;
        },
        0.0,
        [0.5 * PI],
        &[x_max],
        tol,
        |_, _| {},
    )?;
    Ok((theta[0] / PI).floor().max(0.0) as usize)
}

pub fn count_bound_states(pot: &Potential, e_floor: f64, x_max: f64) -> Result<usize> {
    count_bound_states_with(pot, e_floor, x_max, Tolerance::default())
}

/// Sturm count of Neumann eigenvalues in [e_floor, 0), swept over a geometric
/// energy grid from e_floor to -1e-8.
pub fn count_bound_states_with(
    pot: &Potential,
    e_floor: f64,
    x_max: f64,
    tol: Tolerance,
) -> Result<usize> {
    if e_floor >= 0.0 {
        return Err(Error::InvalidArgument("E_floor must be negative".into()));
    }
    let e_top = -1e-8;
    if e_floor >= e_top {
        return Err(Error::InvalidArgument("E_floor must lie below -1e-8".into()));
    }
    if node_count(pot, e_floor, x_max, tol)? > 0 {
        return Err(Error::FloorTooHigh(e_floor));
    }
    let sweep = logspace(-e_floor, -e_top, 24);
    let mut count = 0;
    for mag in sweep {
        let c = node_count(pot, -mag, x_max, tol)?;
        count = count.max(c);
    }
    Ok(count)
}

/// Centered estimates of V'(0) and V'''(0); both vanish for an even extension.
pub fn odd_derivatives_at_zero(pot: &Potential, h: f64) -> (f64, f64) {
    let v = |k: f64| pot.eval(k * h);
    let d1 = (v(-2.0) - 8.0 * v(-1.0) + 8.0 * v(1.0) - v(2.0)) / (12.0 * h);
    let d3 = (v(2.0) - 2.0 * v(1.0) + 2.0 * v(-1.0) - v(-2.0)) / (2.0 * h.powi(3));
    (d1, d3)
}
