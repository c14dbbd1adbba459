//! Distorted Fourier transform F f(xi) = int phi(x, xi^2) f(x) dx, its inverse
//! with weight rho_tilde, and the checks that go with them.

use crate::error::{Error, Result};
use crate::numerics::{bracket, fornberg_weights, simpson_weights, DiffOp, LeftBoundary};
use crate::spectral::SpectralTable;
use crate::specfun::bessel_j0;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    None,
}

/// Samples of a function on a physical (x) or frequency (xi) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
    pub parity: Parity,
}

impl GridFunction {
    pub fn new(coords: Vec<f64>, values: Vec<f64>, parity: Parity) -> Self {
        assert_eq!(coords.len(), values.len());
        GridFunction {
            coords,
            values,
            parity,
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(coords: &[f64], parity: Parity, f: F) -> Self {
        GridFunction {
            coords: coords.to_vec(),
            values: coords.iter().map(|&x| f(x)).collect(),
            parity,
        }
    }

    pub fn zeros_like(&self) -> Self {
        GridFunction {
            coords: self.coords.clone(),
            values: vec![0.0; self.values.len()],
            parity: self.parity,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        GridFunction {
            coords: self.coords.clone(),
            values,
            parity: self.parity,
        }
    }
}

/// Check that `f` lives on the table's x grid.
pub fn check_x_grid(f: &GridFunction, table: &SpectralTable) -> Result<()> {
    if f.len() != table.n_x() {
        return Err(Error::GridMismatch(format!(
            "{} samples, table has {}",
            f.len(),
            table.n_x()
        )));
    }
    let tol = 1e-9 * table.dx();
    if (f.coords[0] - table.x[0]).abs() > tol
        || (f.coords[f.len() - 1] - table.x[table.n_x() - 1]).abs() > tol
    {
        return Err(Error::GridMismatch("x coordinates differ from the table".into()));
    }
    Ok(())
}

pub fn check_xi_grid(g: &GridFunction, table: &SpectralTable) -> Result<()> {
    if g.len() != table.n_xi() {
        return Err(Error::GridMismatch(format!(
            "{} samples, table has {} frequencies",
            g.len(),
            table.n_xi()
        )));
    }
    Ok(())
}

/// True when f is above 1e-10 of its peak near x_max.
pub fn is_truncated(f: &GridFunction) -> bool {
    let peak = f.max_abs();
    let tail = f.values.iter().rev().take(4).fold(0.0f64, |m, v| m.max(v.abs()));
    peak > 0.0 && tail > 1e-10 * peak
}

/// Raw forward transform of samples on the table grid.
pub fn forward_values(f: &[f64], table: &SpectralTable) -> Vec<f64> {
    let wf: Vec<f64> = f.iter().zip(&table.x_weights).map(|(a, w)| a * w).collect();
    (0..table.n_xi())
        .into_par_iter()
        .map(|j| table.column(j).iter().zip(&wf).map(|(p, v)| p * v).sum())
        .collect()
}

/// Raw inverse transform: sum_j phi(x, xi_j^2) g_j rho_tilde_j w_j.
pub fn inverse_values(g: &[f64], table: &SpectralTable) -> Vec<f64> {
    let coef: Vec<f64> = g.iter().zip(&table.weights).map(|(a, w)| a * w).collect();
    let n = table.n_x();
    let chunk = 512;
    let mut out = vec![0.0; n];
    out.par_chunks_mut(chunk).enumerate().for_each(|(c, dst)| {
        let lo = c * chunk;
        for (j, &cj) in coef.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            let col = &table.column(j)[lo..lo + dst.len()];
            for (d, p) in dst.iter_mut().zip(col) {
                *d += cj * p;
            }
        }
    });
    out
}

pub fn forward(f: &GridFunction, table: &SpectralTable) -> Result<GridFunction> {
    check_x_grid(f, table)?;
    if is_truncated(f) {
        log::warn!("TruncationWarning: data does not decay below 1e-10 before x_max");
    }
    Ok(GridFunction {
        coords: table.xi.clone(),
        values: forward_values(&f.values, table),
        parity: Parity::None,
    })
}

pub fn inverse(g: &GridFunction, table: &SpectralTable) -> Result<GridFunction> {
    check_xi_grid(g, table)?;
    Ok(GridFunction {
        coords: table.x.clone(),
        values: inverse_values(&g.values, table),
        parity: Parity::Even,
    })
}

/// Estimated contribution of the dropped band [0, xi_min] to ||F f||^2.
pub fn truncation_estimate(g: &GridFunction, table: &SpectralTable) -> f64 {
    g.values[0] * g.values[0] * table.low_band_weight
}

/// ||g||_{L^2(rho_tilde)} on the table's frequency grid.
pub fn norm_rho(g: &[f64], table: &SpectralTable) -> f64 {
    g.iter().zip(&table.weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
}

/// Plain L^2 norm on the table's x grid (Simpson).
pub fn norm_x(f: &[f64], table: &SpectralTable) -> f64 {
    f.iter().zip(&table.x_weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
}

/// ||<xi>^s F f||_{rho_tilde}.
pub fn sobolev_norm_distorted(f: &GridFunction, s: f64, table: &SpectralTable) -> Result<f64> {
    let g = forward(f, table)?;
    Ok(sobolev_norm_fourier(&g.values, s, table))
}

pub fn sobolev_norm_fourier(g: &[f64], s: f64, table: &SpectralTable) -> f64 {
    g.iter()
        .zip(&table.weights)
        .zip(&table.xi)
        .map(|((v, w), &k)| w * (bracket(k).powf(s) * v).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Grid Sobolev norm sqrt(sum_{k<=s} ||f^(k)||^2) for integer s <= 3.
pub fn sobolev_norm_grid(f: &[f64], s: usize, table: &SpectralTable, parity: Parity) -> f64 {
    let mut total = norm_x(f, table).powi(2);
    let mut d = f.to_vec();
    let mut par = parity;
    for _ in 0..s {
        d = derivative(&d, &table.x, par, 1);
        par = flip(par);
        total += norm_x(&d, table).powi(2);
    }
    total.sqrt()
}

fn flip(p: Parity) -> Parity {
    match p {
        Parity::Even => Parity::Odd,
        Parity::Odd => Parity::Even,
        Parity::None => Parity::None,
    }
}

fn boundary(p: Parity) -> LeftBoundary {
    match p {
        Parity::Even => LeftBoundary::Even,
        Parity::Odd => LeftBoundary::Odd,
        Parity::None => LeftBoundary::OneSided,
    }
}

/// Five-point derivative of order `order` on a uniform grid starting at 0,
/// folding ghost nodes by parity.
pub fn derivative(f: &[f64], x: &[f64], parity: Parity, order: usize) -> Vec<f64> {
    DiffOp::new(x, order, boundary(parity)).apply(f)
}

/// One-sided eleven-point estimate of f'(0).
pub fn slope_at_origin(f: &[f64], dx: f64) -> f64 {
    let nodes: Vec<f64> = (0..11).map(|i| i as f64 * dx).collect();
    fornberg_weights(0.0, &nodes, 1)
        .iter()
        .zip(f)
        .map(|(w, v)| w * v)
        .sum()
}

/// -f'' + V f on the table grid with an even extension across 0.
pub fn apply_a_physical(f: &[f64], table: &SpectralTable) -> Vec<f64> {
    let d2 = derivative(f, &table.x, Parity::Even, 2);
    d2.iter()
        .zip(f)
        .zip(&table.x)
        .map(|((d, v), &x)| -d + table.potential.eval(x) * v)
        .collect()
}

#[derive(Debug, Clone)]
pub struct DiagCheck {
    /// F(A f)
    pub fourier: GridFunction,
    pub sup_discrepancy: f64,
    /// ||F(Af) - xi^2 F f||_{rho_tilde}
    pub l2_discrepancy: f64,
    /// ||<xi>^2 F f||_{rho_tilde}
    pub reference: f64,
}

/// Compare F(-f'' + V f) with xi^2 F f.
pub fn apply_a_diag(f: &GridFunction, table: &SpectralTable) -> Result<DiagCheck> {
    check_x_grid(f, table)?;
    let norm = norm_x(&f.values, table);
    let slope = slope_at_origin(&f.values, table.dx());
    if slope.abs() > 1e-8 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::BoundaryViolation(slope.abs()));
    }
    let af = apply_a_physical(&f.values, table);
    let faf = forward_values(&af, table);
    let ff = forward_values(&f.values, table);
    let diff: Vec<f64> = faf
        .iter()
        .zip(&ff)
        .zip(&table.xi)
        .map(|((a, b), k)| a - k * k * b)
        .collect();
    let sup_discrepancy = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(DiagCheck {
        l2_discrepancy: norm_rho(&diff, table),
        reference: sobolev_norm_fourier(&ff, 2.0, table),
        sup_discrepancy,
        fourier: GridFunction::new(table.xi.clone(), faf, Parity::None),
    })
}

/// F(xi) = int (x xi)^{1/2} J0(x xi) f(x) dx on the input grid, which must be
/// uniform and start at 0. The map is its own inverse.
pub fn hankel_transform(f: &GridFunction) -> Result<GridFunction> {
    let n = f.len();
    if n < 5 {
        return Err(Error::InvalidArgument("hankel transform needs at least 5 samples".into()));
    }
    let h = f.coords[1] - f.coords[0];
    if f.coords[0].abs() > 1e-12 * h
        || f.coords.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h)
    {
        return Err(Error::GridMismatch("hankel transform needs a uniform grid from 0".into()));
    }
    let w = simpson_weights(n, h);
    let wf: Vec<f64> = f.values.iter().zip(&w).map(|(a, b)| a * b).collect();
    let x = &f.coords;
    let values: Vec<f64> = x
        .par_iter()
        .map(|&k| {
            x.iter()
                .zip(&wf)
                .map(|(&t, &v)| {
                    let z = t * k;
                    if v == 0.0 {
                        0.0
                    } else {
                        z.sqrt() * bessel_j0(z) * v
                    }
                })
                .sum()
        })
        .collect();
    Ok(GridFunction::new(x.clone(), values, Parity::None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;
    use crate::potential::Potential;
    use crate::spectral::{build_spectral_table, TableConfig};
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    fn free_table() -> &'static SpectralTable {
        static T: OnceLock<SpectralTable> = OnceLock::new();
        T.get_or_init(|| {
            let cfg = TableConfig {
                x_max: 16.0,
                dx: 0.02,
                xi_min: 1e-5,
                xi_max: 9.0,
                t_max: 0.0,
                ..Default::default()
            };
            build_spectral_table(&Potential::zero(), &cfg).unwrap()
        })
    }

    #[test]
    fn free_gaussian_cosine_transform() {
        let t = free_table();
        let f = GridFunction::from_fn(&t.x, Parity::Even, |x| (-0.5 * x * x).exp());
        let g = forward(&f, t).unwrap();
        for (k, v) in t.xi.iter().zip(&g.values) {
            let exact = -(PI / 2.0).sqrt() * (-0.5 * k * k).exp();
            assert!((v - exact).abs() < 1e-8, "xi {k}");
        }
        let z = forward(&f.zeros_like(), t).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn free_round_trip_and_plancherel() {
        let t = free_table();
        let f = GridFunction::from_fn(&t.x, Parity::Even, |x| (1.0 + x * x) * (-x * x).exp());
        let g = forward(&f, t).unwrap();
        let nf = norm_x(&f.values, t);
        let ng = norm_rho(&g.values, t);
        assert!((ng * ng - nf * nf).abs() < 1e-3 * nf * nf);
        let back = inverse(&g, t).unwrap();
        let err: Vec<f64> = back.values.iter().zip(&f.values).map(|(a, b)| a - b).collect();
        assert!(norm_x(&err, t) < 1e-3 * nf);
    }

    #[test]
    fn free_diagonalization() {
        let t = free_table();
        let f = GridFunction::from_fn(&t.x, Parity::Even, |x| (-0.5 * x * x).exp());
        let d = apply_a_diag(&f, t).unwrap();
        assert!(d.l2_discrepancy < 1e-6 * d.reference);
        // analytic F(Af) for the Gaussian: Af = (1 - x^2) e^{-x^2/2}
        for (k, v) in t.xi.iter().zip(&d.fourier.values) {
            let exact = -(PI / 2.0).sqrt() * k * k * (-0.5 * k * k).exp();
            assert!((v - exact).abs() < 1e-6);
        }
        let odd = GridFunction::from_fn(&t.x, Parity::None, |x| x * (-x * x).exp());
        assert!(matches!(apply_a_diag(&odd, t), Err(Error::BoundaryViolation(_))));
    }

    #[test]
    fn grid_mismatch() {
        let t = free_table();
        let f = GridFunction::from_fn(&linspace(0.0, 1.0, 11), Parity::Even, |x| x);
        assert!(matches!(forward(&f, t), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn hankel_fixed_point_and_involution() {
        let x = linspace(0.0, 20.0, 2001);
        let f = GridFunction::from_fn(&x, Parity::None, |x| x.sqrt() * (-0.5 * x * x).exp());
        let g = hankel_transform(&f).unwrap();
        let l2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let e: Vec<f64> = g.values.iter().zip(&f.values).map(|(a, b)| a - b).collect();
        assert!(l2(&e) < 1e-3 * l2(&f.values));
        let h = GridFunction::from_fn(&x, Parity::None, |x| x.sqrt() * (-(x - 3.0).powi(2)).exp());
        let hh = hankel_transform(&hankel_transform(&h).unwrap()).unwrap();
        let e: Vec<f64> = hh.values.iter().zip(&h.values).map(|(a, b)| a - b).collect();
        assert!(l2(&e) < 1e-3 * l2(&h.values));
        let z = hankel_transform(&f.zeros_like()).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }
}
