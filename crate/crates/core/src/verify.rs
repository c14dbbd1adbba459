//! Empirical checks of the decay and boundedness estimates: both sides of
//! each inequality over a time grid, log-log exponent fits and trend slopes.

use crate::error::{Error, Result};
use crate::evolution::Propagator;
use crate::numerics::{bracket, fit_line};
use crate::odesolve::zero_energy_coefficients;
use crate::spectral::SpectralTable;
use crate::transform::{
    check_x_grid, derivative, forward_values, inverse_values, sobolev_norm_fourier, sobolev_norm_grid, GridFunction,
    Parity,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Start of the window used for decay-exponent fits.
pub const FIT_WINDOW_START: f64 = 10.0;
/// Largest |d log ratio / d log t| accepted as "no growth".
pub const TREND_LIMIT: f64 = 0.02;
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateId {
    DispersiveHalf,
    DispersiveOne,
    Energy,
    VectorField,
    LocalEnergyDecay,
    DivergenceForm,
}

impl EstimateId {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateId::DispersiveHalf => "dispersive_half",
            EstimateId::DispersiveOne => "dispersive_one",
            EstimateId::Energy => "energy",
            EstimateId::VectorField => "vector_field",
            EstimateId::LocalEnergyDecay => "local_energy_decay",
            EstimateId::DivergenceForm => "divergence_form",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate_id: EstimateId,
    pub t_samples: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub sup_ratio: f64,
    pub fitted_exponent: Option<f64>,
    /// 95% half-width of the fitted exponent.
    pub exponent_halfwidth: Option<f64>,
    /// Slope of log(lhs/rhs) against log t on the upper half of the time grid.
    pub trend_slope: Option<f64>,
    pub config_hash: String,
    /// Named scalar diagnostics specific to the estimate.
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
}

impl EstimateReport {
    fn new(id: EstimateId, t: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>) -> Self {
        let sup_ratio = lhs
            .iter()
            .zip(&rhs)
            .filter(|(_, &r)| r > 0.0)
            .fold(0.0f64, |m, (l, r)| m.max(l / r));
        EstimateReport {
            estimate_id: id,
            t_samples: t,
            lhs,
            rhs,
            sup_ratio,
            fitted_exponent: None,
            exponent_halfwidth: None,
            trend_slope: None,
            config_hash: String::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_hash(mut self, hash: &str) -> Self {
        self.config_hash = hash.to_string();
        self
    }

    /// Exponent interval lies inside [lo, hi].
    pub fn exponent_within(&self, lo: f64, hi: f64) -> bool {
        match (self.fitted_exponent, self.exponent_halfwidth) {
            (Some(p), Some(w)) => p - w >= lo && p + w <= hi,
            _ => false,
        }
    }

    pub fn no_growth(&self) -> bool {
        self.trend_slope.map(|s| s.abs() < TREND_LIMIT).unwrap_or(false)
    }

    fn fit_exponent(&mut self, t_min: f64) {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .t_samples
            .iter()
            .zip(&self.lhs)
            .filter(|(&t, &l)| t >= t_min && l > 0.0)
            .map(|(t, l)| (t.ln(), l.ln()))
            .unzip();
        if let Some(fit) = fit_line(&x, &y) {
            self.fitted_exponent = Some(fit.slope);
            self.exponent_halfwidth = Some(fit.slope_halfwidth);
        }
    }

    fn fit_trend(&mut self) {
        let pos: Vec<(f64, f64)> = self
            .t_samples
            .iter()
            .zip(self.lhs.iter().zip(&self.rhs))
            .filter(|(&t, (&l, &r))| t > 0.0 && l > 0.0 && r > 0.0)
            .map(|(&t, (&l, &r))| (t, l / r))
            .collect();
        if pos.len() < 4 {
            return;
        }
        let t_top = pos.last().unwrap().0;
        let t_mid = 0.5 * (pos[0].0 + t_top);
        let (x, y): (Vec<f64>, Vec<f64>) = pos
            .iter()
            .filter(|(t, _)| *t >= t_mid)
            .map(|(t, r)| (t.ln(), r.ln()))
            .unzip();
        self.trend_slope = fit_line(&x, &y).map(|f| f.slope);
    }

    /// Plot rows (t, lhs, rhs, ratio).
    pub fn rows(&self) -> Vec<[f64; 4]> {
        self.t_samples
            .iter()
            .zip(self.lhs.iter().zip(&self.rhs))
            .map(|(&t, (&l, &r))| [t, l, r, if r > 0.0 { l / r } else { 0.0 }])
            .collect()
    }
}

/// Hex SHA-256 of a serialized configuration.
pub fn config_hash(serialized: &[u8]) -> String {
    Sha256::digest(serialized).iter().map(|b| format!("{b:02x}")).collect()
}

fn require_nonresonant(table: &SpectralTable) -> Result<()> {
    let resonant = match &table.coeffs {
        Some(c) => c.resonant,
        None => zero_energy_coefficients(&table.potential, table.config.fit_window)?.resonant,
    };
    if resonant {
        return Err(Error::ResonantPotential);
    }
    Ok(())
}

fn check_times(t_grid: &[f64], table: &SpectralTable) -> Result<()> {
    if t_grid.iter().any(|&t| t < 0.0 || !t.is_finite()) {
        return Err(Error::InvalidArgument("times must be finite and nonnegative".into()));
    }
    if let Some(&t) = t_grid.iter().fold(None, |m: Option<&f64>, t| match m {
        Some(v) if v >= t => Some(v),
        _ => Some(t),
    }) {
        table.check_nyquist(t)?;
    }
    Ok(())
}

fn weighted_l1(f: &[f64], sigma: f64, table: &SpectralTable) -> f64 {
    f.iter()
        .zip(&table.x)
        .zip(&table.x_weights)
        .map(|((v, &x), w)| w * bracket(x).powf(sigma) * v.abs())
        .sum()
}

/// d^l/dt^l of cos(t xi) and sin(t xi)/xi.
fn time_multipliers(t: f64, k: f64, l: usize) -> (f64, f64) {
    let phase = t * k + 0.5 * std::f64::consts::PI * l as f64;
    let p = k.powi(l as i32);
    (p * phase.cos(), p / k * phase.sin())
}

/// sup_x <x>^{-sigma} |u(t,x)| against <t>^{-sigma} (||<x>^sigma f'||_1 + ||<x>^sigma f||_1 + ||<x>^sigma g||_1).
pub fn verify_dispersive(
    f: &GridFunction,
    g: &GridFunction,
    sigma: f64,
    t_grid: &[f64],
    table: &SpectralTable,
) -> Result<EstimateReport> {
    if !(0.5..=1.0).contains(&sigma) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} outside [1/2, 1]")));
    }
    check_times(t_grid, table)?;
    let prop = Propagator::new(f, g, table)?;
    let df = derivative(&f.values, &table.x, Parity::Even, 1);
    let data = weighted_l1(&df, sigma, table) + weighted_l1(&f.values, sigma, table) + weighted_l1(&g.values, sigma, table);
    let weights: Vec<f64> = table.x.iter().map(|&x| bracket(x).powf(-sigma)).collect();
    let lhs: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            let (uh, _) = prop.fourier_state(t, table);
            let u = inverse_values(&uh, table);
            u.iter().zip(&weights).fold(0.0f64, |m, (v, w)| m.max(w * v.abs()))
        })
        .collect();
    let rhs: Vec<f64> = t_grid.iter().map(|&t| bracket(t).powf(-sigma) * data).collect();
    let id = if sigma < 0.75 {
        EstimateId::DispersiveHalf
    } else {
        EstimateId::DispersiveOne
    };
    let mut rep = EstimateReport::new(id, t_grid.to_vec(), lhs, rhs);
    rep.diagnostics.insert("sigma".into(), sigma);
    rep.fit_exponent(FIT_WINDOW_START);
    rep.fit_trend();
    Ok(rep)
}

/// ||d_t^l sqrt(A) u(t)||_{H^k} against ||sqrt(A) f||_{H^{k+l}} + ||g||_{H^{k+l}}, all on the Fourier side.
pub fn verify_energy(
    f: &GridFunction,
    g: &GridFunction,
    k: usize,
    l: usize,
    t_grid: &[f64],
    table: &SpectralTable,
) -> Result<EstimateReport> {
    if k + l > 3 {
        return Err(Error::InvalidArgument("k + l must not exceed 3".into()));
    }
    check_times(t_grid, table)?;
    let prop = Propagator::new(f, g, table)?;
    let xf: Vec<f64> = prop.ff.iter().zip(&table.xi).map(|(v, x)| v * x).collect();
    let rhs_val = sobolev_norm_fourier(&xf, (k + l) as f64, table) + sobolev_norm_fourier(&prop.fg, (k + l) as f64, table);
    let lhs: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            let w: Vec<f64> = (0..table.n_xi())
                .map(|j| {
                    let xi = table.xi[j];
                    let (c, s) = time_multipliers(t, xi, l);
                    xi * (c * prop.ff[j] + s * prop.fg[j])
                })
                .collect();
            sobolev_norm_fourier(&w, k as f64, table)
        })
        .collect();
    let mut rep = EstimateReport::new(EstimateId::Energy, t_grid.to_vec(), lhs, vec![rhs_val; t_grid.len()]);
    rep.fit_trend();
    Ok(rep)
}

fn x_d(f: &[f64], table: &SpectralTable) -> Vec<f64> {
    derivative(f, &table.x, Parity::Even, 1)
        .iter()
        .zip(&table.x)
        .map(|(v, x)| v * x)
        .collect()
}

/// Fourier transform of S^m u(t) for m <= 2, with S = t d/dt + x d/dx.
fn scaled_state_fourier(prop: &Propagator, t: f64, m: usize, table: &SpectralTable) -> Vec<f64> {
    let n = table.n_xi();
    let mut der = vec![vec![0.0; n]; m + 1];
    for (l, row) in der.iter_mut().enumerate() {
        for j in 0..n {
            let (c, s) = time_multipliers(t, table.xi[j], l);
            row[j] = c * prop.ff[j] + s * prop.fg[j];
        }
    }
    if m == 0 {
        return der.swap_remove(0);
    }
    let u = inverse_values(&der[0], table);
    let ut = inverse_values(&der[1], table);
    let du = x_d(&u, table);
    let w: Vec<f64> = if m == 1 {
        (0..u.len()).map(|i| t * ut[i] + du[i]).collect()
    } else {
        let utt = inverse_values(&der[2], table);
        let dut = x_d(&ut, table);
        let ddu = x_d(&du, table);
        (0..u.len())
            .map(|i| t * t * utt[i] + t * ut[i] + 2.0 * t * dut[i] + ddu[i])
            .collect()
    };
    forward_values(&w, table)
}

/// ||sqrt(A) S^m u(t)||_{H^k} against sum_{j<=m} (||sqrt(A) D^j f||_{H^k} + ||D^j g||_{H^k}).
pub fn verify_vector_field(
    f: &GridFunction,
    g: &GridFunction,
    m: usize,
    k: usize,
    t_grid: &[f64],
    table: &SpectralTable,
) -> Result<EstimateReport> {
    if m > 2 {
        return Err(Error::InvalidArgument("m must not exceed 2".into()));
    }
    require_nonresonant(table)?;
    check_times(t_grid, table)?;
    let prop = Propagator::new(f, g, table)?;
    let mut rhs_val = 0.0;
    let (mut fj, mut gj) = (f.values.clone(), g.values.clone());
    for j in 0..=m {
        if j > 0 {
            fj = x_d(&fj, table);
            gj = x_d(&gj, table);
        }
        let ffj: Vec<f64> = forward_values(&fj, table).iter().zip(&table.xi).map(|(v, x)| v * x).collect();
        rhs_val += sobolev_norm_fourier(&ffj, k as f64, table) + sobolev_norm_fourier(&forward_values(&gj, table), k as f64, table);
    }
    let lhs: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            let w: Vec<f64> = scaled_state_fourier(&prop, t, m, table)
                .iter()
                .zip(&table.xi)
                .map(|(v, x)| v * x)
                .collect();
            sobolev_norm_fourier(&w, k as f64, table)
        })
        .collect();
    let mut rep = EstimateReport::new(EstimateId::VectorField, t_grid.to_vec(), lhs, vec![rhs_val; t_grid.len()]);
    rep.diagnostics.insert("m".into(), m as f64);
    rep.fit_trend();
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVariant {
    /// cos(t sqrt A) f with weight <x>^{-1/2-eps}
    Cos,
    /// sin(t sqrt A)/sqrt A f with weight <x>^{-1}
    Sin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayOptions {
    pub variant: DecayVariant,
    pub epsilon: f64,
    /// Time step of the quadrature for the L^2_t integral.
    pub dt: f64,
    /// Horizon T of the saturation test on [T/2, T] and [T, 2T].
    pub saturation_time: f64,
    /// Further epsilons whose saturation ratios are reported alongside (cos variant).
    pub epsilon_sweep: Vec<f64>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            variant: DecayVariant::Cos,
            epsilon: DEFAULT_EPSILON,
            dt: 0.25,
            saturation_time: 40.0,
            epsilon_sweep: vec![0.25, 0.5],
        }
    }
}

/// Cumulative int_0^T ||<x>^{-w} d_t^l S^m U(t) f||_{H^k}^2 dt at each T of `t_grid`.
///
/// Diagnostics hold the increments over [T/2, T] and [T, 2T] for the saturation
/// horizon and their ratio under `saturation_ratio`.
pub fn verify_local_energy_decay(
    f: &GridFunction,
    m: usize,
    k: usize,
    l: usize,
    t_grid: &[f64],
    table: &SpectralTable,
    opts: &DecayOptions,
) -> Result<EstimateReport> {
    if m > 1 {
        return Err(Error::InvalidArgument("m must not exceed 1".into()));
    }
    if k > 2 || l > 2 {
        return Err(Error::InvalidArgument("k and l must not exceed 2".into()));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    check_x_grid(f, table)?;
    let t_end = t_grid
        .iter()
        .cloned()
        .fold(2.0 * opts.saturation_time, f64::max);
    check_times(&[t_end], table)?;
    let zero = f.zeros_like();
    let prop = match opts.variant {
        DecayVariant::Cos => Propagator::new(f, &zero, table)?,
        DecayVariant::Sin => Propagator::new(&zero, f, table)?,
    };
    let power = match opts.variant {
        DecayVariant::Cos => 0.5 + opts.epsilon,
        DecayVariant::Sin => 1.0,
    };
    let mut powers = vec![power];
    if opts.variant == DecayVariant::Cos {
        powers.extend(opts.epsilon_sweep.iter().map(|e| 0.5 + e));
    }
    let weights: Vec<Vec<f64>> = powers
        .iter()
        .map(|p| table.x.iter().map(|&x| bracket(x).powf(-2.0 * p)).collect())
        .collect();
    let n_t = (t_end / opts.dt).ceil() as usize + 1;
    let h = t_end / (n_t - 1) as f64;
    let times: Vec<f64> = (0..n_t).map(|i| i as f64 * h).collect();
    // one density per weight
    let density: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| {
            let w = if l == 0 {
                inverse_values(&scaled_state_fourier(&prop, t, m, table), table)
            } else {
                time_derivative_scaled(&prop, t, m, l, table)
            };
            let mut totals = vec![0.0; weights.len()];
            let mut d = w;
            let mut par = Parity::Even;
            for order in 0..=k {
                if order > 0 {
                    d = derivative(&d, &table.x, par, 1);
                    par = if par == Parity::Even { Parity::Odd } else { Parity::Even };
                }
                for (tot, wt) in totals.iter_mut().zip(&weights) {
                    *tot += d
                        .iter()
                        .zip(wt)
                        .zip(&table.x_weights)
                        .map(|((v, q), w)| w * q * v * v)
                        .sum::<f64>();
                }
            }
            totals
        })
        .collect();
    let big_t = opts.saturation_time;
    let cumulative: Vec<Vec<f64>> = (0..weights.len())
        .map(|j| cumulative_trapezoid(&times, &density.iter().map(|d| d[j]).collect::<Vec<_>>()))
        .collect();
    let at = |j: usize, t: f64| -> f64 { interpolate(&times, &cumulative[j], t) };
    let ratio = |j: usize| -> (f64, f64, f64) {
        let early = at(j, big_t) - at(j, 0.5 * big_t);
        let late = at(j, 2.0 * big_t) - at(j, big_t);
        (early, late, if early > 0.0 { late / early } else { 0.0 })
    };
    let lhs: Vec<f64> = t_grid.iter().map(|&t| at(0, t)).collect();
    let mut rep = EstimateReport::new(EstimateId::LocalEnergyDecay, t_grid.to_vec(), lhs, vec![0.0; t_grid.len()]);
    let (early, late, sat) = ratio(0);
    rep.diagnostics.insert("epsilon".into(), opts.epsilon);
    rep.diagnostics.insert("weight_power".into(), power);
    rep.diagnostics.insert("increment_early".into(), early);
    rep.diagnostics.insert("increment_late".into(), late);
    rep.diagnostics.insert("saturation_ratio".into(), sat);
    for (j, p) in powers.iter().enumerate().skip(1) {
        rep.diagnostics
            .insert(format!("saturation_ratio_eps{}", p - 0.5), ratio(j).2);
    }
    rep.diagnostics.insert("total".into(), at(0, t_end));
    Ok(rep)
}

/// d_t^l S^m U(t) f for l >= 1 from the product rule on (t d/dt)^j.
fn time_derivative_scaled(prop: &Propagator, t: f64, m: usize, l: usize, table: &SpectralTable) -> Vec<f64> {
    let n = table.n_xi();
    let field = |order: usize| -> Vec<f64> {
        let v: Vec<f64> = (0..n)
            .map(|j| {
                let (c, s) = time_multipliers(t, table.xi[j], order);
                c * prop.ff[j] + s * prop.fg[j]
            })
            .collect();
        inverse_values(&v, table)
    };
    let dl = field(l);
    if m == 0 {
        return dl;
    }
    // d_t^l (t u_t + D u) = l d_t^l u + t d_t^{l+1} u + D d_t^l u
    let dl1 = field(l + 1);
    let ddl = x_d(&dl, table);
    (0..dl.len())
        .map(|i| l as f64 * dl[i] + t * dl1[i] + ddl[i])
        .collect()
}

fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for i in 1..t.len() {
        out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
    }
    out
}

fn interpolate(x: &[f64], y: &[f64], x0: f64) -> f64 {
    if x0 <= x[0] {
        return y[0];
    }
    let i = x.partition_point(|&v| v < x0).min(x.len() - 1);
    let (x1, x2) = (x[i - 1], x[i]);
    y[i - 1] + (y[i] - y[i - 1]) * (x0 - x1) / (x2 - x1)
}

/// ||d_t^l d/dx sin(t sqrt A)/sqrt A (g')||_{H^k} against ||g||_{H^{1+k+l}} for odd g.
pub fn verify_divergence_form(
    g_odd: &GridFunction,
    k: usize,
    l: usize,
    t_grid: &[f64],
    table: &SpectralTable,
) -> Result<EstimateReport> {
    if g_odd.parity != Parity::Odd {
        return Err(Error::Parity("divergence-form data must be odd".into()));
    }
    if k + l > 2 {
        return Err(Error::InvalidArgument("k + l must not exceed 2".into()));
    }
    require_nonresonant(table)?;
    check_x_grid(g_odd, table)?;
    check_times(t_grid, table)?;
    let dg = derivative(&g_odd.values, &table.x, Parity::Odd, 1);
    let ghat = forward_values(&dg, table);
    let rhs_val = sobolev_norm_grid(&g_odd.values, 1 + k + l, table, Parity::Odd);
    let lhs: Vec<f64> = t_grid
        .par_iter()
        .map(|&t| {
            let v: Vec<f64> = (0..table.n_xi())
                .map(|j| time_multipliers(t, table.xi[j], l).1 * ghat[j])
                .collect();
            let w = inverse_values(&v, table);
            let grad = derivative(&w, &table.x, Parity::Even, 1);
            sobolev_norm_grid(&grad, k, table, Parity::Odd)
        })
        .collect();
    let mut rep = EstimateReport::new(EstimateId::DivergenceForm, t_grid.to_vec(), lhs, vec![rhs_val; t_grid.len()]);
    rep.fit_trend();
    Ok(rep)
}
