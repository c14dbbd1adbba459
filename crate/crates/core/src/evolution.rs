//! Wave evolution u_tt + A u = F through the distorted Fourier representation,
//! plus an independent leapfrog solver used as an oracle.

use crate::error::{Error, Result};
use crate::numerics::{simpson_weights, DiffOp, LeftBoundary};
use crate::potential::Potential;
use crate::spectral::SpectralTable;
use crate::transform::{check_x_grid, forward_values, inverse_values, GridFunction, Parity};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

impl WaveState {
    /// Cubic Lagrange interpolation of (u, ut) at `x` on a uniform grid.
    pub fn sample(&self, x: f64) -> (f64, f64) {
        let n = self.x.len();
        let h = self.x[1] - self.x[0];
        let s = (x - self.x[0]) / h;
        let i = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut out = (0.0, 0.0);
        for a in 0..4 {
            let mut l = 1.0;
            for b in 0..4 {
                if a != b {
                    l *= (s - (i + b) as f64) / (a as f64 - b as f64);
                }
            }
            out.0 += l * self.u[i + a];
            out.1 += l * self.ut[i + a];
        }
        out
    }

    /// Restrict/interpolate onto another grid.
    pub fn resample(&self, x: &[f64]) -> WaveState {
        let (u, ut) = x.iter().map(|&p| self.sample(p)).unzip();
        WaveState {
            t: self.t,
            x: x.to_vec(),
            u,
            ut,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub total: f64,
    pub kinetic: f64,
    pub gradient: f64,
    pub potential_part: f64,
}

fn require_even(f: &GridFunction, what: &str) -> Result<()> {
    if f.parity == Parity::Odd {
        return Err(Error::Parity(format!("{what} must have an even extension")));
    }
    Ok(())
}

/// Cached transforms of Cauchy data, evaluated at any t.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub ff: Vec<f64>,
    pub fg: Vec<f64>,
}

impl Propagator {
    pub fn new(f: &GridFunction, g: &GridFunction, table: &SpectralTable) -> Result<Self> {
        require_even(f, "f")?;
        require_even(g, "g")?;
        check_x_grid(f, table)?;
        check_x_grid(g, table)?;
        Ok(Propagator {
            ff: forward_values(&f.values, table),
            fg: forward_values(&g.values, table),
        })
    }

    /// Fourier-side (u, u_t) at time t.
    pub fn fourier_state(&self, t: f64, table: &SpectralTable) -> (Vec<f64>, Vec<f64>) {
        let n = table.n_xi();
        let mut uh = vec![0.0; n];
        let mut uth = vec![0.0; n];
        for j in 0..n {
            let k = table.xi[j];
            let (s, c) = (t * k).sin_cos();
            uh[j] = c * self.ff[j] + s / k * self.fg[j];
            uth[j] = -k * s * self.ff[j] + c * self.fg[j];
        }
        (uh, uth)
    }

    pub fn state(&self, t: f64, table: &SpectralTable) -> Result<WaveState> {
        table.check_nyquist(t)?;
        let (uh, uth) = self.fourier_state(t, table);
        Ok(WaveState {
            t,
            x: table.x.clone(),
            u: inverse_values(&uh, table),
            ut: inverse_values(&uth, table),
        })
    }
}

/// u(t) = cos(t sqrt A) f + sin(t sqrt A)/sqrt A g and its time derivative.
pub fn propagate(f: &GridFunction, g: &GridFunction, t: f64, table: &SpectralTable) -> Result<WaveState> {
    table.check_nyquist(t)?;
    Propagator::new(f, g, table)?.state(t, table)
}

/// Time profile of a separable source T(s) h(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Temporal {
    Cos { omega: f64 },
    Sin { omega: f64 },
    /// s^p
    Power { p: i32 },
}

impl Temporal {
    pub fn value(&self, s: f64) -> f64 {
        match *self {
            Temporal::Cos { omega } => (omega * s).cos(),
            Temporal::Sin { omega } => (omega * s).sin(),
            Temporal::Power { p } => s.powi(p),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            Temporal::Cos { omega } => -omega * (omega * s).sin(),
            Temporal::Sin { omega } => omega * (omega * s).cos(),
            Temporal::Power { p } => {
                if p == 0 {
                    0.0
                } else {
                    p as f64 * s.powi(p - 1)
                }
            }
        }
    }
}

/// A forcing term sampled on the table grid.
pub trait Source: Sync {
    fn sample(&self, s: f64) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct SeparableSource {
    pub temporal: Temporal,
    pub profile: Vec<f64>,
}

impl Source for SeparableSource {
    fn sample(&self, s: f64) -> Vec<f64> {
        let a = self.temporal.value(s);
        self.profile.iter().map(|v| a * v).collect()
    }
}

/// Source given by a closure.
pub struct FnSource<F: Fn(f64) -> Vec<f64> + Sync>(pub F);

impl<F: Fn(f64) -> Vec<f64> + Sync> Source for FnSource<F> {
    fn sample(&self, s: f64) -> Vec<f64> {
        (self.0)(s)
    }
}

/// Fourier-side Duhamel integral by Simpson quadrature over `n_s` nodes in s.
pub fn duhamel_fourier(
    src: &dyn Source,
    t: f64,
    table: &SpectralTable,
    n_s: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    table.check_nyquist(t)?;
    if n_s < 3 {
        return Err(Error::InvalidArgument("duhamel needs at least 3 nodes".into()));
    }
    let n = table.n_xi();
    let mut uh = vec![0.0; n];
    let mut uth = vec![0.0; n];
    if t == 0.0 {
        return Ok((uh, uth));
    }
    let h = t / (n_s - 1) as f64;
    let w = simpson_weights(n_s, h);
    for (k, wk) in w.iter().enumerate() {
        let s = k as f64 * h;
        let fs = forward_values(&src.sample(s), table);
        for j in 0..n {
            let xi = table.xi[j];
            let (sn, cs) = ((t - s) * xi).sin_cos();
            uh[j] += wk * sn / xi * fs[j];
            uth[j] += wk * cs * fs[j];
        }
    }
    Ok((uh, uth))
}

pub fn duhamel(src: &dyn Source, t: f64, table: &SpectralTable, n_s: usize) -> Result<WaveState> {
    let (uh, uth) = duhamel_fourier(src, t, table, n_s)?;
    Ok(WaveState {
        t,
        x: table.x.clone(),
        u: inverse_values(&uh, table),
        ut: inverse_values(&uth, table),
    })
}

/// 1/2 int (u_t^2 + u_x^2 + V u^2) dx by Simpson, u_x with an even closure at 0.
pub fn energy(state: &WaveState, pot: &Potential) -> EnergyValue {
    let n = state.x.len();
    let h = state.x[1] - state.x[0];
    let w = simpson_weights(n, h);
    let ux = DiffOp::new(&state.x, 1, LeftBoundary::Even).apply(&state.u);
    let (mut k, mut g, mut p) = (0.0, 0.0, 0.0);
    for i in 0..n {
        k += w[i] * state.ut[i] * state.ut[i];
        g += w[i] * ux[i] * ux[i];
        p += w[i] * pot.eval(state.x[i]) * state.u[i] * state.u[i];
    }
    let (kinetic, gradient, potential_part) = (0.5 * k, 0.5 * g, 0.5 * p);
    EnergyValue {
        total: kinetic + gradient + potential_part,
        kinetic,
        gradient,
        potential_part,
    }
}

/// 2 int_band sin(t xi) phi(x, xi^2) phi(y, xi^2) rho(xi^2) dxi, with x and y
/// snapped to the nearest grid nodes.
pub fn propagator_kernel(x: f64, y: f64, t: f64, band: (f64, f64), table: &SpectralTable) -> Result<f64> {
    let lo = table.xi[0];
    let hi = table.xi[table.n_xi() - 1];
    if band.0 < lo * (1.0 - 1e-12) || band.1 > hi * (1.0 + 1e-12) || band.0 >= band.1 {
        return Err(Error::InvalidArgument(format!(
            "band [{}, {}] outside the table range [{lo}, {hi}]",
            band.0, band.1
        )));
    }
    let ix = (x / table.dx()).round() as usize;
    let iy = (y / table.dx()).round() as usize;
    if ix >= table.n_x() || iy >= table.n_x() {
        return Err(Error::InvalidArgument("kernel point beyond x_max".into()));
    }
    let idx: Vec<usize> = (0..table.n_xi())
        .filter(|&j| table.xi[j] >= band.0 && table.xi[j] <= band.1)
        .collect();
    let mut sum = 0.0;
    for (m, &j) in idx.iter().enumerate() {
        let k = table.xi[j];
        // trapezoid restricted to the band
        let left = if m > 0 { k - table.xi[idx[m - 1]] } else { 0.0 };
        let right = if m + 1 < idx.len() { table.xi[idx[m + 1]] - k } else { 0.0 };
        let wq = 0.5 * (left + right);
        let col = table.column(j);
        sum += wq * (t * k).sin() * col[ix] * col[iy] * table.rho_tilde[j] / k;
    }
    Ok(sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdtdOptions {
    pub dx: f64,
    pub dt: f64,
    /// Domain length; None picks data support + T + 2.
    pub length: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FdtdRun {
    pub states: Vec<WaveState>,
    /// Discrete energy at every step; exactly conserved by the scheme up to rounding.
    pub discrete_energy: Vec<f64>,
}

/// Largest x where |f| or |g| exceeds 1e-12 of the data peak, scanning up to `limit`.
pub fn data_support<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: &F, g: &G, limit: f64) -> f64 {
    let h = 1e-2;
    let n = (limit / h) as usize;
    let vals: Vec<f64> = (0..=n).map(|i| f(i as f64 * h).abs().max(g(i as f64 * h).abs())).collect();
    let peak = vals.iter().cloned().fold(0.0, f64::max);
    let last = vals.iter().rposition(|&v| v > 1e-12 * peak).unwrap_or(0);
    (last as f64 + 1.0) * h
}

/// Leapfrog on [0, L]: Neumann ghost node at 0, Dirichlet at L, Taylor start-up.
/// Returns states at `times` (rounded to the step grid).
pub fn fdtd_solve<F, G>(pot: &Potential, f: F, g: G, t_end: f64, opts: &FdtdOptions, times: &[f64]) -> Result<FdtdRun>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let FdtdOptions { dx, dt, length } = *opts;
    if dt > 0.9 * dx {
        return Err(Error::CflViolation(dt / dx));
    }
    let support = data_support(&f, &g, 1000.0);
    let required = support + t_end;
    let l = length.unwrap_or(required + 2.0);
    if l < required {
        return Err(Error::DomainTooSmall { length: l, required });
    }
    let nx = (l / dx).ceil() as usize + 1;
    let x: Vec<f64> = (0..nx).map(|i| i as f64 * dx).collect();
    let steps = (t_end / dt).round() as usize;
    let dt = if steps > 0 { t_end / steps as f64 } else { dt };
    let v: Vec<f64> = x.iter().map(|&p| pot.eval(p)).collect();
    let lap = |u: &[f64], out: &mut [f64]| {
        let n = u.len();
        out[0] = 2.0 * (u[1] - u[0]) / (dx * dx) - v[0] * u[0];
        for i in 1..n - 1 {
            out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx) - v[i] * u[i];
        }
        out[n - 1] = 0.0;
    };
    let mut u0: Vec<f64> = x.iter().map(|&p| f(p)).collect();
    let g0: Vec<f64> = x.iter().map(|&p| g(p)).collect();
    u0[nx - 1] = 0.0;
    let mut lu = vec![0.0; nx];
    let mut lg = vec![0.0; nx];
    lap(&u0, &mut lu);
    lap(&g0, &mut lg);
    let mut u1: Vec<f64> = (0..nx)
        .map(|i| u0[i] + dt * g0[i] + 0.5 * dt * dt * lu[i] + dt.powi(3) / 6.0 * lg[i])
        .collect();
    u1[nx - 1] = 0.0;
    let wts: Vec<f64> = (0..nx)
        .map(|i| if i == 0 { 0.5 * dx } else if i == nx - 1 { 0.0 } else { dx })
        .collect();
    let disc_energy = |a: &[f64], b: &[f64], lb: &[f64]| {
        let mut e = 0.0;
        for i in 0..nx {
            let d = (b[i] - a[i]) / dt;
            e += wts[i] * (0.5 * d * d - 0.5 * a[i] * lb[i]);
        }
        e
    };
    let targets: Vec<usize> = times.iter().map(|&t| (t / dt).round() as usize).collect();
    let mut states = vec![None; times.len()];
    let mut energies = Vec::with_capacity(steps + 1);
    let mut prev = u0.clone();
    let mut cur = u1;
    let mut next = vec![0.0; nx];
    let mut lcur = vec![0.0; nx];
    // state at step 0
    for (k, &s) in targets.iter().enumerate() {
        if s == 0 {
            states[k] = Some(WaveState {
                t: 0.0,
                x: x.clone(),
                u: u0.clone(),
                ut: g0.clone(),
            });
        }
    }
    for n in 1..=steps.max(1) {
        lap(&cur, &mut lcur);
        energies.push(disc_energy(&prev, &cur, &lcur));
        if n > steps {
            break;
        }
        for i in 0..nx - 1 {
            next[i] = 2.0 * cur[i] - prev[i] + dt * dt * lcur[i];
        }
        next[nx - 1] = 0.0;
        for (k, &s) in targets.iter().enumerate() {
            if s == n {
                let ut: Vec<f64> = (0..nx).map(|i| (next[i] - prev[i]) / (2.0 * dt)).collect();
                states[k] = Some(WaveState {
                    t: n as f64 * dt,
                    x: x.clone(),
                    u: cur.clone(),
                    ut,
                });
            }
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let states = states
        .into_iter()
        .zip(times)
        .map(|(s, &t)| s.ok_or_else(|| Error::InvalidArgument(format!("output time {t} beyond T"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(FdtdRun {
        states,
        discrete_energy: energies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_spectral_table, TableConfig};
    use std::sync::OnceLock;

    fn free_table() -> &'static SpectralTable {
        static T: OnceLock<SpectralTable> = OnceLock::new();
        T.get_or_init(|| {
            let cfg = TableConfig {
                x_max: 24.0,
                dx: 0.02,
                xi_min: 1e-5,
                xi_max: 10.0,
                t_max: 10.0,
                ..Default::default()
            };
            build_spectral_table(&Potential::zero(), &cfg).unwrap()
        })
    }

    fn gauss(x: f64) -> f64 {
        (-x * x).exp()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
        let den: f64 = b.iter().map(|q| q * q).sum();
        (num / den).sqrt()
    }

    #[test]
    fn initial_data_reproduced() {
        let t = free_table();
        let f = GridFunction::from_fn(&t.x, Parity::Even, gauss);
        let g = GridFunction::from_fn(&t.x, Parity::Even, |x| x * x * gauss(x));
        let s = propagate(&f, &g, 0.0, t).unwrap();
        assert!(rel_l2(&s.u, &f.values) < 1e-3);
        assert!(rel_l2(&s.ut, &g.values) < 1e-3);
    }

    #[test]
    fn free_dalembert() {
        let t = free_table();
        let f = GridFunction::from_fn(&t.x, Parity::Even, gauss);
        let zero = f.zeros_like();
        for time in [2.0, 7.0] {
            let s = propagate(&f, &zero, time, t).unwrap();
            let exact: Vec<f64> = t
                .x
                .iter()
                .map(|&x| 0.5 * (gauss(x + time) + gauss((x - time).abs())))
                .collect();
            let err = s.u.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-3, "t {time}: {err}");
        }
        assert!(matches!(propagate(&f, &zero, 100.0, t), Err(Error::NyquistViolation(_))));
    }

    #[test]
    fn free_energy_is_gradient_norm() {
        let t = free_table();
        let f = GridFunction::from_fn(&t.x, Parity::Even, gauss);
        let s = WaveState {
            t: 0.0,
            x: t.x.clone(),
            u: f.values.clone(),
            ut: vec![0.0; t.n_x()],
        };
        let e = energy(&s, &Potential::zero());
        // 1/2 int_0^inf 4x^2 e^{-2x^2} dx = sqrt(pi/2)/4
        let exact = (std::f64::consts::PI / 2.0).sqrt() / 4.0;
        assert!((e.total - exact).abs() < 1e-6);
        let z = WaveState {
            u: vec![0.0; t.n_x()],
            ..s
        };
        assert_eq!(energy(&z, &Potential::zero()).total, 0.0);
    }

    #[test]
    fn duhamel_closed_form() {
        let t = free_table();
        let h: Vec<f64> = t.x.iter().map(|&x| gauss(x)).collect();
        let omega = 1.3;
        let src = SeparableSource {
            temporal: Temporal::Cos { omega },
            profile: h.clone(),
        };
        let time = 4.0;
        let (uh, _) = duhamel_fourier(&src, time, t, 201).unwrap();
        let hh = forward_values(&h, t);
        for j in 0..t.n_xi() {
            let k = t.xi[j];
            let m = if (k - omega).abs() < 1e-9 {
                time * (omega * time).sin() / (2.0 * omega)
            } else {
                ((omega * time).cos() - (k * time).cos()) / (k * k - omega * omega)
            };
            assert!((uh[j] - m * hh[j]).abs() < 1e-6, "xi {k}");
        }
        let zero = SeparableSource {
            temporal: Temporal::Cos { omega },
            profile: vec![0.0; t.n_x()],
        };
        let s = duhamel(&zero, time, t, 11).unwrap();
        assert!(s.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duhamel_solves_the_forced_equation() {
        let t = free_table();
        let pot = Potential::zero();
        let src = SeparableSource {
            temporal: Temporal::Sin { omega: 0.7 },
            profile: t.x.iter().map(|&x| gauss(x)).collect(),
        };
        let (time, d) = (3.0, 1e-2);
        let a = duhamel(&src, time - d, t, 301).unwrap();
        let b = duhamel(&src, time, t, 301).unwrap();
        let c = duhamel(&src, time + d, t, 301).unwrap();
        let lap = crate::transform::derivative(&b.u, &t.x, Parity::Even, 2);
        let forcing = src.sample(time);
        let mut worst = 0.0f64;
        for i in 0..t.n_x() / 2 {
            let utt = (a.u[i] - 2.0 * b.u[i] + c.u[i]) / (d * d);
            let r = utt - lap[i] + pot.eval(t.x[i]) * b.u[i] - forcing[i];
            worst = worst.max(r.abs());
        }
        assert!(worst < 1e-3, "residual {worst}");
    }

    #[test]
    fn kernel_vanishes_at_time_zero() {
        let t = free_table();
        assert_eq!(propagator_kernel(1.0, 1.0, 0.0, (1.0, 5.0), t).unwrap(), 0.0);
    }

    #[test]
    fn fdtd_matches_dalembert_at_second_order() {
        let pot = Potential::zero();
        let mut errs = vec![];
        for dx in [0.02, 0.01, 0.005] {
            let opts = FdtdOptions {
                dx,
                dt: 0.5 * dx,
                length: None,
            };
            let run = fdtd_solve(&pot, gauss, |_| 0.0, 4.0, &opts, &[4.0]).unwrap();
            let s = &run.states[0];
            let exact: Vec<f64> = s.x.iter().map(|&x| 0.5 * (gauss(x + 4.0) + gauss((x - 4.0).abs()))).collect();
            errs.push(rel_l2(&s.u, &exact));
            let e0 = run.discrete_energy[0];
            let spread = run.discrete_energy.iter().fold(0.0f64, |m, e| m.max((e - e0).abs()));
            assert!(spread < 1e-6 * e0.abs());
        }
        let order = (errs[0] / errs[2]).log2() / 2.0;
        assert!((order - 2.0).abs() < 0.2, "order {order} {errs:?}");
    }

    #[test]
    fn fdtd_guards() {
        let pot = Potential::zero();
        let bad = FdtdOptions {
            dx: 0.01,
            dt: 0.0095,
            length: None,
        };
        assert!(matches!(fdtd_solve(&pot, gauss, |_| 0.0, 1.0, &bad, &[1.0]), Err(Error::CflViolation(_))));
        let small = FdtdOptions {
            dx: 0.01,
            dt: 0.005,
            length: Some(5.0),
        };
        assert!(matches!(
            fdtd_solve(&pot, gauss, |_| 0.0, 10.0, &small, &[1.0]),
            Err(Error::DomainTooSmall { .. })
        ));
    }
}
