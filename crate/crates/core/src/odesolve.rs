//! Regular solutions phi, theta, zero-energy coefficients, and outgoing Jost solutions.

use crate::error::{Error, Result};
use crate::integrator::{integrate, Tolerance};
use crate::potential::{Potential, TailKind};
use crate::specfun::{hankel_h_with_prime, GAMMA0};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// phi and theta with phi(0) = -1, phi'(0) = 0, theta(0) = 0, theta'(0) = 1.
#[derive(Debug, Clone)]
pub struct RegularSolution {
    pub lambda: f64,
    pub x_grid: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub theta: Vec<f64>,
    pub dtheta: Vec<f64>,
}

impl RegularSolution {
    /// max |theta phi' - theta' phi - 1| over the grid.
    pub fn wronskian_defect(&self) -> f64 {
        (0..self.x_grid.len())
            .map(|i| (self.theta[i] * self.dphi[i] - self.dtheta[i] * self.phi[i] - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn solve_regular(pot: &Potential, lambda: f64, x_grid: &[f64]) -> Result<RegularSolution> {
    solve_regular_with(pot, lambda, x_grid, Tolerance::default())
}

pub fn solve_regular_with(
    pot: &Potential,
    lambda: f64,
    x_grid: &[f64],
    tol: Tolerance,
) -> Result<RegularSolution> {
    if x_grid.first() != Some(&0.0) {
        return Err(Error::GridMismatch("regular solutions start at x = 0".into()));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonnegative".into()));
    }
    let n = x_grid.len();
    let mut sol = RegularSolution {
        lambda,
        x_grid: x_grid.to_vec(),
        phi: vec![0.0; n],
        dphi: vec![0.0; n],
        theta: vec![0.0; n],
        dtheta: vec![0.0; n],
    };
    sol.phi[0] = -1.0;
    sol.dtheta[0] = 1.0;
    {
        let RegularSolution {
            phi,
            dphi,
            theta,
            dtheta,
            ..
        } = &mut sol;
        integrate(
            |x, y: &[f64; 4], dy: &mut [f64; 4]| {
                let q = pot.eval(x) - lambda;
                dy[0] = y[1];
                dy[1] = q * y[0];
                dy[2] = y[3];
                dy[3] = q * y[2];
            },
            0.0,
            [-1.0, 0.0, 0.0, 1.0],
            &x_grid[1..],
            tol,
            |k, y| {
                phi[k + 1] = y[0];
                dphi[k + 1] = y[1];
                theta[k + 1] = y[2];
                dtheta[k + 1] = y[3];
            },
        )?;
    }
    Ok(sol)
}

/// phi alone on the grid, the hot path of table construction.
pub fn solve_phi(pot: &Potential, lambda: f64, x_grid: &[f64], tol: Tolerance) -> Result<Vec<f64>> {
    if x_grid.first() != Some(&0.0) {
        return Err(Error::GridMismatch("regular solutions start at x = 0".into()));
    }
    let mut phi = vec![0.0; x_grid.len()];
    phi[0] = -1.0;
    integrate(
        |x, y: &[f64; 2], dy: &mut [f64; 2]| {
            dy[0] = y[1];
            dy[1] = (pot.eval(x) - lambda) * y[0];
        },
        0.0,
        [-1.0, 0.0],
        &x_grid[1..],
        tol,
        |k, y| phi[k + 1] = y[0],
    )?;
    Ok(phi)
}

/// Tail coefficients of the zero-energy solutions.
///
/// For an inverse-square tail the basis is {x^{1/2} log x, x^{1/2}}; for a
/// short-range potential it is {x, 1}. In both cases a1 b2 - a2 b1 = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEnergyCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub resonant: bool,
    pub gamma0: f64,
    pub basis: TailKind,
    /// |a1 b2 - a2 b1 - 1|
    pub defect: f64,
    pub condition: f64,
}

fn basis(kind: TailKind, x: f64) -> (f64, f64) {
    match kind {
        TailKind::InverseSquare => {
            let r = x.sqrt();
            (r * x.ln(), r)
        }
        TailKind::ShortRange => (x, 1.0),
    }
}

/// Least-squares fit of sampled zero-energy solutions against the tail basis.
pub fn fit_zero_energy_samples(
    x: &[f64],
    phi0: &[f64],
    theta0: &[f64],
    kind: TailKind,
) -> Result<ZeroEnergyCoefficients> {
    // scale columns so the conditioning reflects shape, not magnitude
    let cols: Vec<(f64, f64)> = x.iter().map(|&t| basis(kind, t)).collect();
    let s1 = cols.iter().map(|c| c.0 * c.0).sum::<f64>().sqrt();
    let s2 = cols.iter().map(|c| c.1 * c.1).sum::<f64>().sqrt();
    if s1 == 0.0 || s2 == 0.0 {
        return Err(Error::IllConditionedFit(f64::INFINITY));
    }
    let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
    for c in &cols {
        let (u, v) = (c.0 / s1, c.1 / s2);
        g11 += u * u;
        g12 += u * v;
        g22 += v * v;
    }
    let tr = g11 + g22;
    let det = g11 * g22 - g12 * g12;
    let disc = ((g11 - g22).powi(2) + 4.0 * g12 * g12).sqrt();
    let (lmax, lmin) = (0.5 * (tr + disc), 0.5 * (tr - disc));
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if !(condition <= 1e12) || det <= 0.0 {
        return Err(Error::IllConditionedFit(condition));
    }
    let solve = |y: &[f64]| {
        let (mut r1, mut r2) = (0.0, 0.0);
        for (c, &v) in cols.iter().zip(y) {
            r1 += c.0 / s1 * v;
            r2 += c.1 / s2 * v;
        }
        let c1 = (g22 * r1 - g12 * r2) / det;
        let c2 = (g11 * r2 - g12 * r1) / det;
        (c1 / s1, c2 / s2)
    };
    let (a1, a2) = solve(phi0);
    let (b1, b2) = solve(theta0);
    let mut c = ZeroEnergyCoefficients {
        a1,
        a2,
        b1,
        b2,
        resonant: false,
        gamma0: GAMMA0,
        basis: kind,
        defect: (a1 * b2 - a2 * b1 - 1.0).abs(),
        condition,
    };
    c.resonant = a1.abs() <= 1e-3 * a2.abs().max(1.0);
    Ok(c)
}

/// Fit a lambda = 0 solution over `window` sampled at `n` points.
pub fn fit_zero_energy_coeffs(
    sol: &RegularSolution,
    window: (f64, f64),
    kind: TailKind,
) -> Result<ZeroEnergyCoefficients> {
    if sol.lambda != 0.0 {
        return Err(Error::InvalidArgument("fit needs the lambda = 0 solution".into()));
    }
    let idx: Vec<usize> = (0..sol.x_grid.len())
        .filter(|&i| sol.x_grid[i] >= window.0 && sol.x_grid[i] <= window.1)
        .collect();
    if idx.len() < 4 {
        return Err(Error::InvalidArgument("fit window holds fewer than 4 samples".into()));
    }
    let x: Vec<f64> = idx.iter().map(|&i| sol.x_grid[i]).collect();
    let p: Vec<f64> = idx.iter().map(|&i| sol.phi[i]).collect();
    let t: Vec<f64> = idx.iter().map(|&i| sol.theta[i]).collect();
    fit_zero_energy_samples(&x, &p, &t, kind)
}

/// Solve at lambda = 0 on a fresh grid and fit: the usual entry point.
pub fn zero_energy_coefficients(pot: &Potential, window: (f64, f64)) -> Result<ZeroEnergyCoefficients> {
    let n = 400;
    let mut grid = vec![0.0];
    grid.extend((0..n).map(|i| window.0 + (window.1 - window.0) * i as f64 / (n - 1) as f64));
    let sol = solve_regular(pot, 0.0, &grid)?;
    fit_zero_energy_coeffs(&sol, window, pot.tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    Hankel,
    PlaneWave,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JostOptions {
    pub x0: f64,
    pub c: f64,
    pub max_domain: f64,
    /// Force a seed kind; None picks Hankel for inverse-square tails and plane waves otherwise.
    pub seed: Option<SeedKind>,
}

impl Default for JostOptions {
    fn default() -> Self {
        JostOptions {
            x0: 60.0,
            c: 40.0,
            max_domain: 1e7,
            seed: None,
        }
    }
}

impl JostOptions {
    pub fn seed_point(&self, xi: f64) -> f64 {
        self.x0.max(self.c / xi)
    }
}

#[derive(Debug, Clone)]
pub struct JostSolution {
    pub xi: f64,
    pub x_grid: Vec<f64>,
    pub f: Vec<Complex64>,
    pub df: Vec<Complex64>,
    pub seed_kind: SeedKind,
    pub x_star: f64,
}

impl JostSolution {
    /// max |W(f, conj f) + 2 i xi| over the grid.
    pub fn wronskian_defect(&self) -> f64 {
        let target = Complex64::new(0.0, -2.0 * self.xi);
        (0..self.x_grid.len())
            .map(|i| (self.f[i] * self.df[i].conj() - self.df[i] * self.f[i].conj() - target).norm())
            .fold(0.0, f64::max)
    }
}

/// Outgoing solution f ~ e^{i x xi}, integrated inward from the seeding point
/// to every grid point (in any order).
pub fn solve_jost(pot: &Potential, xi: f64, x_grid: &[f64], opts: &JostOptions) -> Result<JostSolution> {
    solve_jost_with(pot, xi, x_grid, opts, Tolerance::default())
}

pub fn solve_jost_with(
    pot: &Potential,
    xi: f64,
    x_grid: &[f64],
    opts: &JostOptions,
    tol: Tolerance,
) -> Result<JostSolution> {
    if !(xi > 0.0) {
        return Err(Error::DomainError(xi));
    }
    let x_star = opts.seed_point(xi);
    if x_star > opts.max_domain {
        return Err(Error::SeedOutOfRange {
            xi,
            x_star,
            max_domain: opts.max_domain,
        });
    }
    let seed_kind = opts.seed.unwrap_or(match pot.tail {
        TailKind::InverseSquare => SeedKind::Hankel,
        TailKind::ShortRange => SeedKind::PlaneWave,
    });
    let (f0, df0) = match seed_kind {
        SeedKind::Hankel => {
            let (h, dh) = hankel_h_with_prime(x_star * xi, 1)?;
            (h, dh * xi)
        }
        SeedKind::PlaneWave => {
            let e = Complex64::from_polar(1.0, x_star * xi);
            (e, Complex64::new(0.0, xi) * e)
        }
    };
    let n = x_grid.len();
    let mut f = vec![Complex64::new(0.0, 0.0); n];
    let mut df = f.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x_grid[a].partial_cmp(&x_grid[b]).unwrap());
    let inward: Vec<usize> = order.iter().rev().copied().filter(|&i| x_grid[i] <= x_star).collect();
    let outward: Vec<usize> = order.iter().copied().filter(|&i| x_grid[i] > x_star).collect();
    let lam = xi * xi;
    let rhs = |x: f64, y: &[f64; 4], dy: &mut [f64; 4]| {
        let q = pot.eval(x) - lam;
        dy[0] = y[1];
        dy[1] = q * y[0];
        dy[2] = y[3];
        dy[3] = q * y[2];
    };
    let y0 = [f0.re, df0.re, f0.im, df0.im];
    for set in [&inward, &outward] {
        if set.is_empty() {
            continue;
        }
        let targets: Vec<f64> = set.iter().map(|&i| x_grid[i]).collect();
        integrate(rhs, x_star, y0, &targets, tol, |k, y| {
            let i = set[k];
            f[i] = Complex64::new(y[0], y[2]);
            df[i] = Complex64::new(y[1], y[3]);
        })?;
    }
    Ok(JostSolution {
        xi,
        x_grid: x_grid.to_vec(),
        f,
        df,
        seed_kind,
        x_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;

    #[test]
    fn free_regular_solutions() {
        let x = linspace(0.0, 50.0, 501);
        let s = solve_regular(&Potential::zero(), 1.0, &x).unwrap();
        for (i, &t) in x.iter().enumerate() {
            assert!((s.phi[i] + t.cos()).abs() < 1e-8);
            assert!((s.theta[i] - t.sin()).abs() < 1e-8);
        }
        assert!(s.wronskian_defect() < 1e-8);
    }

    #[test]
    fn wronskian_constant_for_model() {
        let x = linspace(0.0, 40.0, 401);
        for lam in [0.0, 0.01, 1.0, 25.0] {
            let s = solve_regular(&Potential::model(4.0), lam, &x).unwrap();
            assert!(s.wronskian_defect() < 1e-7, "lambda {lam}: {}", s.wronskian_defect());
        }
    }

    #[test]
    fn synthetic_fit_is_exact() {
        let x = linspace(20.0, 400.0, 50);
        let p: Vec<f64> = x.iter().map(|&t| 2.0 * t.sqrt() * t.ln() + 3.0 * t.sqrt()).collect();
        let q: Vec<f64> = x.iter().map(|&t| t.sqrt() * t.ln() + 2.0 * t.sqrt()).collect();
        let c = fit_zero_energy_samples(&x, &p, &q, TailKind::InverseSquare).unwrap();
        assert!((c.a1 - 2.0).abs() < 1e-10 && (c.a2 - 3.0).abs() < 1e-10);
        assert!(c.defect < 1e-9 && !c.resonant);
    }

    #[test]
    fn zero_energy_fits() {
        let tail = zero_energy_coefficients(&Potential::tail(1.0), (50.0, 1000.0)).unwrap();
        assert!(tail.defect < 1e-3, "defect {}", tail.defect);
        let free = zero_energy_coefficients(&Potential::zero(), (50.0, 1000.0)).unwrap();
        assert!(free.resonant);
        assert!((free.a2 + 1.0).abs() < 1e-8 && (free.b1 - 1.0).abs() < 1e-8);
        // (1+x^2)^{1/4} solves the cored model with core 2 at zero energy
        let res = zero_energy_coefficients(&Potential::model(2.0), (50.0, 1000.0)).unwrap();
        assert!(res.resonant, "a1 = {}", res.a1);
        let m = zero_energy_coefficients(&Potential::model(4.0), (50.0, 1000.0)).unwrap();
        assert!(!m.resonant && m.a1 < 0.0);
        assert!(m.defect < 1e-3);
    }

    #[test]
    fn free_jost() {
        let x = linspace(0.0, 30.0, 301);
        let j = solve_jost(&Potential::zero(), 2.0, &x, &JostOptions::default()).unwrap();
        assert_eq!(j.seed_kind, SeedKind::PlaneWave);
        for (i, &t) in x.iter().enumerate() {
            assert!((j.f[i] - Complex64::from_polar(1.0, 2.0 * t)).norm() < 1e-8);
        }
    }

    #[test]
    fn jost_wronskian_and_seed_range() {
        let x = linspace(0.0, 30.0, 121);
        let j = solve_jost(&Potential::model(4.0), 0.3, &x, &JostOptions::default()).unwrap();
        assert_eq!(j.seed_kind, SeedKind::Hankel);
        assert!(j.wronskian_defect() < 1e-6 * 0.3);
        let opts = JostOptions {
            max_domain: 1e3,
            ..Default::default()
        };
        assert!(matches!(
            solve_jost(&Potential::model(4.0), 1e-2, &x, &opts),
            Err(Error::SeedOutOfRange { .. })
        ));
    }

    #[test]
    fn seeding_stability_at_low_frequency() {
        let xi = 0.05;
        let pot = Potential::model(4.0);
        let a = solve_jost(&pot, xi, &[1.0], &JostOptions::default()).unwrap();
        let wide = JostOptions {
            x0: 120.0,
            c: 80.0,
            ..Default::default()
        };
        let b = solve_jost(&pot, xi, &[1.0], &wide).unwrap();
        assert!((a.f[0] - b.f[0]).norm() < 1e-4 * a.f[0].norm());
    }

    #[test]
    fn hankel_and_plane_wave_seeds_overlap() {
        // A plane wave is only an approximate outgoing solution of the inverse-square
        // tail, so it is seeded far enough out that its O(1/(x xi)) error is negligible.
        let pot = Potential::tail(1.0);
        let x = linspace(0.0, 20.0, 41);
        for xi in [0.4, 0.5, 0.6] {
            let h = solve_jost(&pot, xi, &x, &JostOptions::default()).unwrap();
            let far = JostOptions {
                x0: 5000.0,
                seed: Some(SeedKind::PlaneWave),
                ..Default::default()
            };
            let p = solve_jost(&pot, xi, &x, &far).unwrap();
            for i in 0..x.len() {
                assert!((h.f[i] - p.f[i]).norm() < 1e-4 * h.f[i].norm(), "xi {xi} x {}", x[i]);
            }
        }
    }
}
