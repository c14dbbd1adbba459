//! Wronskians, the m-function, spectral density, connection coefficient a(xi),
//! and the discretized table of phi(x, xi^2) with Plancherel weights.

use crate::error::{Error, Result};
use crate::integrator::Tolerance;
use crate::numerics::simpson_weights;
pub use crate::odesolve::ZeroEnergyCoefficients;
use crate::odesolve::{
    solve_jost, solve_regular, solve_regular_with, zero_energy_coefficients, JostOptions,
};
use crate::potential::{Potential, TailKind};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub xi: f64,
    /// W(f+, phi)
    pub w_phi: Complex64,
    /// W(f+, theta)
    pub w_theta: Complex64,
    pub m: Complex64,
    pub rho: f64,
    pub rho_tilde: f64,
    pub a_coeff: Complex64,
    pub eval_x: f64,
    /// Relative change of W(f+, phi) between two evaluation points.
    pub wronskian_variation: f64,
}

/// Default Wronskian evaluation point: the middle of [5, X*/2].
pub fn default_eval_x(xi: f64, opts: &JostOptions) -> f64 {
    0.5 * (5.0 + 0.5 * opts.seed_point(xi))
}

pub fn spectral_point(pot: &Potential, xi: f64, opts: &JostOptions) -> Result<SpectralPoint> {
    spectral_point_at(pot, xi, default_eval_x(xi, opts), opts)
}

pub fn spectral_point_at(
    pot: &Potential,
    xi: f64,
    eval_x: f64,
    opts: &JostOptions,
) -> Result<SpectralPoint> {
    if !(xi > 0.0) {
        return Err(Error::DomainError(xi));
    }
    let x_check = 0.5 * (5.0f64.min(eval_x) + eval_x);
    let pts = [x_check, eval_x];
    let jost = solve_jost(pot, xi, &pts, opts)?;
    let reg = solve_regular(pot, xi * xi, &[0.0, x_check, eval_x])?;
    let w = |k: usize| {
        let f = jost.f[k];
        let df = jost.df[k];
        let (p, dp) = (reg.phi[k + 1], reg.dphi[k + 1]);
        let (t, dt) = (reg.theta[k + 1], reg.dtheta[k + 1]);
        (f * dp - df * p, f * dt - df * t)
    };
    let (wp0, _) = w(0);
    let (w_phi, w_theta) = w(1);
    if w_phi.norm() < 1e-12 {
        return Err(Error::DegenerateWronskian {
            xi,
            value: w_phi.norm(),
        });
    }
    let m = -w_theta / w_phi;
    let rho = m.im / PI;
    let a_coeff = (Complex64::new(0.0, 1.0) * w_phi / (2.0 * xi)).conj();
    Ok(SpectralPoint {
        xi,
        w_phi,
        w_theta,
        m,
        rho,
        rho_tilde: 2.0 * xi * rho,
        a_coeff,
        eval_x,
        wronskian_variation: (w_phi - wp0).norm() / w_phi.norm(),
    })
}

/// Leading small-energy law of rho(lambda) from the zero-energy coefficients.
pub fn small_lambda_rho_model(c: &ZeroEnergyCoefficients, lambda: f64) -> f64 {
    let bracket = 0.5 * c.a1 * lambda.ln() + c.gamma0 * c.a1 - c.a2;
    1.0 / (0.5 * PI * PI * c.a1 * c.a1 + 2.0 * bracket * bracket)
}

pub fn classify_resonance(c: &ZeroEnergyCoefficients, threshold: f64) -> bool {
    c.a1.abs() <= threshold * c.a2.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableConfig {
    pub x_max: f64,
    pub dx: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub log_points_per_decade: usize,
    /// Largest propagation time the table must resolve.
    pub t_max: f64,
    pub jost: JostOptions,
    pub rtol: f64,
    pub fit_window: (f64, f64),
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            x_max: 120.0,
            dx: 0.02,
            xi_min: 1e-3,
            xi_max: 12.0,
            log_points_per_decade: 48,
            t_max: 100.0,
            jost: JostOptions::default(),
            rtol: 1e-10,
            fit_window: (50.0, 1000.0),
        }
    }
}

impl TableConfig {
    /// Largest xi spacing allowed by the Nyquist rule.
    pub fn nyquist_spacing(&self) -> f64 {
        PI / (4.0 * (self.t_max + self.x_max))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.dx > 0.0 && self.x_max > 0.0) {
            return bad("x_max and dx must be positive");
        }
        let n = self.x_max / self.dx;
        if (n - n.round()).abs() > 1e-6 || n.round() < 8.0 {
            return bad("x_max must be a multiple of dx with at least 8 intervals");
        }
        if !(self.xi_min > 0.0 && self.xi_max > self.xi_min) {
            return bad("need 0 < xi_min < xi_max");
        }
        if self.log_points_per_decade == 0 {
            return bad("log_points_per_decade must be positive");
        }
        if self.t_max < 0.0 {
            return bad("t_max must be nonnegative");
        }
        Ok(())
    }

    pub fn x_grid(&self) -> Vec<f64> {
        let n = (self.x_max / self.dx).round() as usize;
        (0..=n).map(|i| i as f64 * self.dx).collect()
    }

    /// Log-spaced from xi_min until the spacing reaches the Nyquist bound,
    /// uniform from there to xi_max. Returns nodes and trapezoid weights
    /// (log-Jacobian on the first segment).
    pub fn xi_grid(&self) -> (Vec<f64>, Vec<f64>) {
        let du = std::f64::consts::LN_10 / self.log_points_per_decade as f64;
        let dlin = self.nyquist_spacing();
        let mut xi = vec![self.xi_min];
        while {
            let last = *xi.last().unwrap();
            last * (du.exp() - 1.0) < dlin && last * du.exp() < self.xi_max
        } {
            let last = *xi.last().unwrap();
            xi.push(last * du.exp());
        }
        let n_log = xi.len();
        // Simpson in log xi on the geometric part, Simpson in xi on the uniform part
        let mut w: Vec<f64> = simpson_weights(n_log, du)
            .iter()
            .zip(&xi)
            .map(|(w, x)| w * x)
            .collect();
        let start = xi[n_log - 1];
        let span = self.xi_max - start;
        if span > 0.0 {
            let m = (span / dlin).ceil().max(1.0) as usize;
            let h = span / m as f64;
            let lin = simpson_weights(m + 1, h);
            for k in 1..=m {
                xi.push(start + h * k as f64);
                w.push(lin[k]);
            }
            w[n_log - 1] += lin[0];
        }
        (xi, w)
    }
}

/// phi(x_i, xi_j^2) on a uniform x grid for a set of frequencies, with
/// Plancherel weights rho_tilde(xi_j) times quadrature weights.
#[derive(Debug, Clone)]
pub struct SpectralTable {
    pub config: TableConfig,
    pub potential: Potential,
    pub xi: Vec<f64>,
    pub quad_weights: Vec<f64>,
    pub rho_tilde: Vec<f64>,
    /// rho_tilde * quad_weights
    pub weights: Vec<f64>,
    pub points: Vec<SpectralPoint>,
    pub x: Vec<f64>,
    pub x_weights: Vec<f64>,
    /// Row j holds phi(., xi_j^2) on the x grid.
    pub phi: Vec<f64>,
    /// Largest |theta phi' - theta' phi - 1| over all columns.
    pub residual: f64,
    pub coeffs: Option<ZeroEnergyCoefficients>,
    /// Estimate of the integral of rho_tilde over the dropped band [0, xi_min].
    pub low_band_weight: f64,
}

impl SpectralTable {
    pub fn n_xi(&self) -> usize {
        self.xi.len()
    }

    pub fn n_x(&self) -> usize {
        self.x.len()
    }

    pub fn dx(&self) -> f64 {
        self.config.dx
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n_x();
        &self.phi[j * n..(j + 1) * n]
    }

    /// Largest local xi spacing.
    pub fn max_spacing(&self) -> f64 {
        self.xi.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Check dxi * (t + x_max) <= pi/4.
    pub fn check_nyquist(&self, t: f64) -> Result<()> {
        let q = self.max_spacing() * (t.abs() + self.x_max());
        if q > std::f64::consts::FRAC_PI_4 * (1.0 + 1e-9) {
            return Err(Error::NyquistViolation(q));
        }
        Ok(())
    }
}

struct Column {
    phi: Vec<f64>,
    point: SpectralPoint,
    defect: f64,
}

fn build_column(pot: &Potential, xi: f64, x: &[f64], cfg: &TableConfig) -> Result<Column> {
    let tol = Tolerance {
        rtol: cfg.rtol,
        ..Tolerance::default()
    };
    let reg = solve_regular_with(pot, xi * xi, x, tol)?;
    let point = spectral_point(pot, xi, &cfg.jost)?;
    let defect = reg.wronskian_defect();
    Ok(Column {
        phi: reg.phi,
        point,
        defect,
    })
}

pub fn build_spectral_table(pot: &Potential, cfg: &TableConfig) -> Result<SpectralTable> {
    cfg.validate()?;
    let x = cfg.x_grid();
    let (xi, quad_weights) = cfg.xi_grid();
    let cols: Vec<Column> = xi
        .par_iter()
        .map(|&k| {
            build_column(pot, k, &x, cfg).map_err(|e| Error::AtFrequency {
                xi: k,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n_x = x.len();
    let mut phi = Vec::with_capacity(n_x * xi.len());
    let mut points = Vec::with_capacity(xi.len());
    let mut residual = 0.0f64;
    for c in cols {
        phi.extend_from_slice(&c.phi);
        residual = residual.max(c.defect);
        points.push(c.point);
    }
    let rho_tilde: Vec<f64> = points.iter().map(|p| p.rho_tilde).collect();
    if let Some(j) = rho_tilde.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::AtFrequency {
            xi: xi[j],
            source: Box::new(Error::InvalidArgument(format!(
                "nonpositive spectral weight {}",
                rho_tilde[j]
            ))),
        });
    }
    let weights: Vec<f64> = rho_tilde.iter().zip(&quad_weights).map(|(r, w)| r * w).collect();
    let coeffs = zero_energy_coefficients(pot, cfg.fit_window).ok();
    let low_band_weight = match coeffs {
        Some(c) if pot.tail == TailKind::InverseSquare && !c.resonant => {
            low_band_integral(&c, cfg.xi_min)
        }
        _ => rho_tilde[0] * cfg.xi_min,
    };
    let x_weights = simpson_weights(n_x, cfg.dx);
    Ok(SpectralTable {
        config: cfg.clone(),
        potential: pot.clone(),
        xi,
        quad_weights,
        rho_tilde,
        weights,
        points,
        x,
        x_weights,
        phi,
        residual,
        coeffs,
        low_band_weight,
    })
}

/// Integral of 2 xi rho_model(xi^2) over [0, xi_min], in the variable s = log(xi_min/xi).
fn low_band_integral(c: &ZeroEnergyCoefficients, xi_min: f64) -> f64 {
    let n = 4000;
    let s_max = 80.0;
    let h = s_max / n as f64;
    (0..=n)
        .map(|k| {
            let s = k as f64 * h;
            let xi = xi_min * (-s).exp();
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * h * 2.0 * xi * xi * small_lambda_rho_model(c, xi * xi)
        })
        .sum()
}
