//! The scaling field S = t d/dt + x d/dx, its Fourier-side deviation B, the
//! kernel F(xi, eta), and residuals of the commutator identities.

use crate::error::{Error, Result};
use crate::evolution::SeparableSource;
use crate::numerics::{fornberg_weights, DiffOp, LeftBoundary};
use crate::potential::eval_u;
use crate::spectral::SpectralTable;
use crate::transform::{
    check_xi_grid, derivative, forward_values, inverse_values, norm_rho, norm_x, sobolev_norm_grid,
    GridFunction, Parity,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// x f'(x). Grids starting at 0 use the parity of f to close the stencil.
pub fn apply_d(f: &GridFunction) -> GridFunction {
    let left = if f.coords[0].abs() < 1e-14 {
        match f.parity {
            Parity::Even => LeftBoundary::Even,
            Parity::Odd => LeftBoundary::Odd,
            Parity::None => LeftBoundary::OneSided,
        }
    } else {
        LeftBoundary::OneSided
    };
    let d = DiffOp::new(&f.coords, 1, left).apply(&f.values);
    let values = d.iter().zip(&f.coords).map(|(v, x)| v * x).collect();
    f.with_values(values)
}

fn xi_d(g: &[f64], table: &SpectralTable) -> Vec<f64> {
    let d = DiffOp::new(&table.xi, 1, LeftBoundary::OneSided).apply(g);
    d.iter().zip(&table.xi).map(|(v, k)| v * k).collect()
}

fn x_d_even(f: &[f64], table: &SpectralTable) -> Vec<f64> {
    let d = derivative(f, &table.x, Parity::Even, 1);
    d.iter().zip(&table.x).map(|(v, x)| v * x).collect()
}

/// B g = F(D F^{-1} g) + xi d/dxi g + g on raw frequency samples.
pub fn apply_b_values(g: &[f64], table: &SpectralTable) -> Vec<f64> {
    let h = inverse_values(g, table);
    let dh = x_d_even(&h, table);
    let fdh = forward_values(&dh, table);
    let dg = xi_d(g, table);
    (0..g.len()).map(|j| fdh[j] + dg[j] + g[j]).collect()
}

pub fn apply_b(g: &GridFunction, table: &SpectralTable) -> Result<GridFunction> {
    check_xi_grid(g, table)?;
    Ok(g.with_values(apply_b_values(&g.values, table)))
}

/// E = F^{-1} B F on physical samples.
pub fn apply_e_values(f: &[f64], table: &SpectralTable) -> Vec<f64> {
    inverse_values(&apply_b_values(&forward_values(f, table), table), table)
}

/// F(xi, eta) = int phi(x, xi^2) phi(x, eta^2) U(x) dx on a frequency grid.
#[derive(Debug, Clone)]
pub struct BKernel {
    pub xi: Vec<f64>,
    /// Row-major n x n.
    pub f_matrix: Vec<f64>,
    pub u_samples: Vec<f64>,
}

impl BKernel {
    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.f_matrix[a * self.n() + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.n();
        &self.f_matrix[a * n..(a + 1) * n]
    }

    /// Largest |F(a,b) - F(b,a)|.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n();
        let mut m = 0.0f64;
        for a in 0..n {
            for b in a + 1..n {
                m = m.max((self.get(a, b) - self.get(b, a)).abs());
            }
        }
        m
    }
}

pub fn kernel_f(table: &SpectralTable) -> BKernel {
    let u_samples: Vec<f64> = table.x.iter().map(|&x| eval_u(&table.potential, x)).collect();
    let n = table.n_xi();
    let uw: Vec<f64> = u_samples.iter().zip(&table.x_weights).map(|(u, w)| u * w).collect();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let pa: Vec<f64> = table.column(a).iter().zip(&uw).map(|(p, w)| p * w).collect();
            (a..n)
                .map(|b| pa.iter().zip(table.column(b)).map(|(p, q)| p * q).sum())
                .collect()
        })
        .collect();
    let mut f_matrix = vec![0.0; n * n];
    for (a, row) in upper.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let b = a + k;
            f_matrix[a * n + b] = v;
            f_matrix[b * n + a] = v;
        }
    }
    BKernel {
        xi: table.xi.clone(),
        f_matrix,
        u_samples,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub sup: f64,
    /// ||f_hat||_{rho_tilde}
    pub reference: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl IdentityResidual {
    pub fn relative(&self) -> f64 {
        if self.reference > 0.0 {
            self.sup / self.reference
        } else {
            self.sup
        }
    }
}

/// sup_xi | xi^2 B f(xi) - B(eta^2 f)(xi) - int F(xi, eta) rho_tilde(eta) f(eta) d eta |.
pub fn offdiag_identity_residual(f_hat: &[f64], table: &SpectralTable, kernel: &BKernel) -> IdentityResidual {
    let bf = apply_b_values(f_hat, table);
    let k2f: Vec<f64> = f_hat.iter().zip(&table.xi).map(|(v, k)| k * k * v).collect();
    let bk2f = apply_b_values(&k2f, table);
    let n = table.n_xi();
    let lhs: Vec<f64> = (0..n).map(|j| table.xi[j].powi(2) * bf[j] - bk2f[j]).collect();
    let wf: Vec<f64> = f_hat.iter().zip(&table.weights).map(|(v, w)| v * w).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|a| kernel.row(a).iter().zip(&wf).map(|(k, v)| k * v).sum())
        .collect();
    let sup = lhs.iter().zip(&rhs).fold(0.0f64, |m, (l, r)| m.max((l - r).abs()));
    IdentityResidual {
        sup,
        reference: norm_rho(f_hat, table),
        lhs,
        rhs,
    }
}

/// Principal value of int F(xi, eta) rho_tilde(eta) f(eta) / ((xi + eta)(xi - eta)) d eta.
///
/// Nodes with |eta - xi| < delta are replaced by the first-order Taylor value of the
/// subtracted numerator; delta defaults to two local grid steps.
pub fn singular_b0(
    f_hat: &[f64],
    kernel: &BKernel,
    rho_tilde: &[f64],
    exclusion_half_width: Option<f64>,
) -> Result<Vec<f64>> {
    let xi = &kernel.xi;
    let n = xi.len();
    if f_hat.len() != n || rho_tilde.len() != n {
        return Err(Error::GridMismatch("b0 inputs must share the kernel grid".into()));
    }
    let (a, b) = (xi[0], xi[n - 1]);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let x = xi[i];
        let spacing = 0.5 * (xi[(i + 1).min(n - 1)] - xi[i.saturating_sub(1)]).abs();
        let spacing = if i == 0 || i == n - 1 { 2.0 * spacing } else { spacing };
        let delta = exclusion_half_width.unwrap_or(2.0 * spacing);
        if delta > 8.0 * spacing * (1.0 + 1e-12) {
            return Err(Error::ExclusionTooWide {
                delta,
                limit: 8.0 * spacing,
            });
        }
        let num = |j: usize| kernel.get(i, j) * rho_tilde[j] * f_hat[j] / (x + xi[j]);
        let n_i = num(i);
        // derivative of the numerator at xi_i from a five-node window
        let start = i.saturating_sub(2).min(n.saturating_sub(5));
        let nodes: Vec<f64> = (start..start + 5.min(n)).map(|j| xi[j]).collect();
        let dn: f64 = fornberg_weights(x, &nodes, 1)
            .iter()
            .enumerate()
            .map(|(k, w)| w * num(start + k))
            .sum();
        let lo = (0..n).find(|&j| xi[j] > x - delta - 1e-12 * x).unwrap_or(i);
        let hi = (0..n).rev().find(|&j| xi[j] < x + delta + 1e-12 * x).unwrap_or(i);
        let (gl, gr) = (xi[lo], xi[hi]);
        let g = |j: usize| (num(j) - n_i) / (x - xi[j]);
        let mut s = 0.0;
        // trapezoid on [a, xi_lo] and [xi_hi, b]
        for j in 0..lo {
            let h = xi[j + 1] - xi[j];
            let right = if j + 1 == lo { -dn } else { g(j + 1) };
            s += 0.5 * h * (g(j) + right);
        }
        for j in hi..n - 1 {
            let h = xi[j + 1] - xi[j];
            let left = if j == hi { -dn } else { g(j) };
            s += 0.5 * h * (left + g(j + 1));
        }
        // gap: the subtracted integrand equals -N'(xi) to first order
        s += -dn * (gr - gl);
        let log_term = if x > a && x < b { ((x - a) / (b - x)).ln() } else { 0.0 };
        out[i] = s + n_i * log_term;
    }
    Ok(out)
}

/// a'(xi) by five-point differences on the table grid.
pub fn a_derivative(table: &SpectralTable) -> Vec<num_complex::Complex64> {
    let op = DiffOp::new(&table.xi, 1, LeftBoundary::OneSided);
    let re: Vec<f64> = table.points.iter().map(|p| p.a_coeff.re).collect();
    let im: Vec<f64> = table.points.iter().map(|p| p.a_coeff.im).collect();
    op.apply(&re)
        .into_iter()
        .zip(op.apply(&im))
        .map(|(r, i)| num_complex::Complex64::new(r, i))
        .collect()
}

/// 2 pi xi^2 rho(xi^2) Re(a'(xi) conj a(xi)).
pub fn bdiag_formula(table: &SpectralTable) -> Vec<f64> {
    let da = a_derivative(table);
    table
        .points
        .iter()
        .zip(da)
        .map(|(p, d)| 2.0 * PI * p.xi * p.xi * p.rho * (d * p.a_coeff.conj()).re)
        .collect()
}

/// (B g)(xi0) / g(xi0) for a Gaussian bump of width `sigma` centred at xi0.
pub fn bdiag_narrowband(table: &SpectralTable, xi0: f64, sigma: f64) -> f64 {
    let g = mirrored_bump(&table.xi, xi0, sigma);
    let bg = apply_b_values(&g, table);
    let j = nearest(&table.xi, xi0);
    bg[j] / g[j]
}

fn mirrored_bump(xi: &[f64], c: f64, sigma: f64) -> Vec<f64> {
    let g = |d: f64| (-d * d / (2.0 * sigma * sigma)).exp();
    xi.iter().map(|&k| g(k - c) + g(k + c)).collect()
}

fn nearest(xi: &[f64], x0: f64) -> usize {
    let mut best = 0;
    for (j, &v) in xi.iter().enumerate() {
        if (v - x0).abs() < (xi[best] - x0).abs() {
            best = j;
        }
    }
    best
}

/// Diagonal multiplier of B at one frequency by three routes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiagonalComparison {
    pub xi: f64,
    /// 2 pi xi^2 rho Re(a' conj a)
    pub formula: f64,
    /// (B g)(xi)/g(xi) for a narrow bump g
    pub narrowband: f64,
    /// (B g - B0 g)(xi)/g(xi) with the principal-value part from the kernel
    pub kernel_route: f64,
    /// narrowband within 10% of the formula
    pub agree: bool,
}

pub fn compare_diagonal(
    table: &SpectralTable,
    kernel: &BKernel,
    xi0: &[f64],
    sigma: f64,
) -> Result<Vec<DiagonalComparison>> {
    let hf = bdiag_formula(table);
    xi0.iter()
        .map(|&x0| {
            let j = nearest(&table.xi, x0);
            let g = mirrored_bump(&table.xi, table.xi[j], 3.0 * sigma);
            let bg = apply_b_values(&g, table);
            let b0 = singular_b0(&g, kernel, &table.rho_tilde, None)?;
            let formula = hf[j];
            let narrowband = bdiag_narrowband(table, table.xi[j], sigma);
            Ok(DiagonalComparison {
                xi: table.xi[j],
                formula,
                narrowband,
                kernel_route: (bg[j] - b0[j]) / g[j],
                agree: (narrowband - formula).abs() <= 0.1 * formula.abs(),
            })
        })
        .collect()
}

/// max |F(xi, eta)| (xi^4 + eta^4) over pairs with xi >= 2 eta + 1.
pub fn offdiag_decay_constant(kernel: &BKernel) -> f64 {
    let n = kernel.n();
    let mut m = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let (x, e) = (kernel.xi[a], kernel.xi[b]);
            if x >= 2.0 * e + 1.0 {
                m = m.max(kernel.get(a, b).abs() * (x.powi(4) + e.powi(4)));
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorResidual {
    pub residual: f64,
    /// ||f||_{H^1} of the data
    pub reference: f64,
}

impl CommutatorResidual {
    pub fn relative(&self) -> f64 {
        if self.reference > 0.0 {
            self.residual / self.reference
        } else {
            self.residual
        }
    }
}

fn combine(parts: &[(&[f64], f64)]) -> Vec<f64> {
    let n = parts[0].0.len();
    (0..n).map(|i| parts.iter().map(|(v, c)| c * v[i]).sum()).collect()
}

/// || S cos(t sqrt A) f - cos(t sqrt A) D f - [E, cos(t sqrt A)] f ||.
pub fn commutator_s_cos_residual(f: &GridFunction, t: f64, table: &SpectralTable) -> Result<CommutatorResidual> {
    table.check_nyquist(t)?;
    let g = forward_values(&f.values, table);
    let cos: Vec<f64> = table.xi.iter().map(|k| (t * k).cos()).collect();
    let mul = |m: &[f64], v: &[f64]| -> Vec<f64> { m.iter().zip(v).map(|(a, b)| a * b).collect() };
    let u = inverse_values(&mul(&cos, &g), table);
    let uth: Vec<f64> = (0..g.len()).map(|j| -table.xi[j] * (t * table.xi[j]).sin() * g[j]).collect();
    let ut = inverse_values(&uth, table);
    let xu = x_d_even(&u, table);
    let su = combine(&[(&ut, t), (&xu, 1.0)]);
    let df = x_d_even(&f.values, table);
    let cos_df = inverse_values(&mul(&cos, &forward_values(&df, table)), table);
    let e_cos = inverse_values(&apply_b_values(&mul(&cos, &g), table), table);
    let cos_e = inverse_values(&mul(&cos, &apply_b_values(&g, table)), table);
    let r = combine(&[(&su, 1.0), (&cos_df, -1.0), (&e_cos, -1.0), (&cos_e, 1.0)]);
    Ok(CommutatorResidual {
        residual: norm_x(&r, table),
        reference: sobolev_norm_grid(&f.values, 1, table, Parity::Even),
    })
}

/// || S sin(t sqrt A)/sqrt A g - sin(t sqrt A)/sqrt A (D g + g) - [E, sin(t sqrt A)/sqrt A] g ||.
pub fn commutator_s_sin_residual(g: &GridFunction, t: f64, table: &SpectralTable) -> Result<CommutatorResidual> {
    table.check_nyquist(t)?;
    let gh = forward_values(&g.values, table);
    let sinc: Vec<f64> = table.xi.iter().map(|k| (t * k).sin() / k).collect();
    let mul = |m: &[f64], v: &[f64]| -> Vec<f64> { m.iter().zip(v).map(|(a, b)| a * b).collect() };
    let u = inverse_values(&mul(&sinc, &gh), table);
    let uth: Vec<f64> = (0..gh.len()).map(|j| (t * table.xi[j]).cos() * gh[j]).collect();
    let ut = inverse_values(&uth, table);
    let xu = x_d_even(&u, table);
    let su = combine(&[(&ut, t), (&xu, 1.0)]);
    let dg = x_d_even(&g.values, table);
    let forcing = combine(&[(&dg, 1.0), (&g.values, 1.0)]);
    let s_forcing = inverse_values(&mul(&sinc, &forward_values(&forcing, table)), table);
    let e_s = inverse_values(&apply_b_values(&mul(&sinc, &gh), table), table);
    let s_e = inverse_values(&mul(&sinc, &apply_b_values(&gh, table)), table);
    let r = combine(&[(&su, 1.0), (&s_forcing, -1.0), (&e_s, -1.0), (&s_e, 1.0)]);
    Ok(CommutatorResidual {
        residual: norm_x(&r, table),
        reference: sobolev_norm_grid(&g.values, 1, table, Parity::Even),
    })
}

/// ad_D^m(B) f for m in {1, 2}, with D = xi d/dxi on the frequency grid, by nesting.
pub fn iterated_commutator_addb(m: usize, f_hat: &[f64], table: &SpectralTable) -> Result<Vec<f64>> {
    if !(1..=2).contains(&m) {
        return Err(Error::InvalidArgument("ad_D^m(B) is provided for m = 1, 2".into()));
    }
    let ad1 = |v: &[f64]| -> Vec<f64> {
        let a = xi_d(&apply_b_values(v, table), table);
        let b = apply_b_values(&xi_d(v, table), table);
        a.iter().zip(&b).map(|(p, q)| p - q).collect()
    };
    if m == 1 {
        return Ok(ad1(f_hat));
    }
    let a = xi_d(&ad1(f_hat), table);
    let b = ad1(&xi_d(f_hat, table));
    Ok(a.iter().zip(&b).map(|(p, q)| p - q).collect())
}

/// ad_D^2(B) f = D^2 B f - 2 D B D f + B D^2 f.
pub fn addb2_direct(f_hat: &[f64], table: &SpectralTable) -> Vec<f64> {
    let d = |v: &[f64]| xi_d(v, table);
    let b = |v: &[f64]| apply_b_values(v, table);
    let t1 = d(&d(&b(f_hat)));
    let t2 = d(&b(&d(f_hat)));
    let t3 = b(&d(&d(f_hat)));
    (0..f_hat.len()).map(|j| t1[j] - 2.0 * t2[j] + t3[j]).collect()
}

/// Residual of S u(t) = int sin((t-s) sqrt A)/sqrt A (S src)(s) ds + 2 u(t)
/// + int [E, sin((t-s) sqrt A)/sqrt A] src(s) ds for a separable source.
pub fn duhamel_s_commutation_residual(
    src: &SeparableSource,
    t: f64,
    table: &SpectralTable,
    n_s: usize,
) -> Result<CommutatorResidual> {
    table.check_nyquist(t)?;
    if n_s < 3 {
        return Err(Error::InvalidArgument("need at least 3 time nodes".into()));
    }
    let h = &src.profile;
    let hh = forward_values(h, table);
    let dh = x_d_even(h, table);
    let dhh = forward_values(&dh, table);
    let n = table.n_xi();
    let w = crate::numerics::simpson_weights(n_s, t / (n_s - 1) as f64);
    // M(xi) = int T(s) sin((t-s)xi)/xi ds, Mt = int T(s) cos((t-s)xi) ds, Ms for s T'(s)
    let (mut m, mut mt, mut ms) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (k, wk) in w.iter().enumerate() {
        let s = t * k as f64 / (n_s - 1) as f64;
        let (ts, dts) = (src.temporal.value(s), s * src.temporal.derivative(s));
        for j in 0..n {
            let xi = table.xi[j];
            let (sn, cs) = ((t - s) * xi).sin_cos();
            m[j] += wk * ts * sn / xi;
            mt[j] += wk * ts * cs;
            ms[j] += wk * dts * sn / xi;
        }
    }
    let uh: Vec<f64> = (0..n).map(|j| m[j] * hh[j]).collect();
    let uth: Vec<f64> = (0..n).map(|j| mt[j] * hh[j]).collect();
    let u = inverse_values(&uh, table);
    let ut = inverse_values(&uth, table);
    let xu = x_d_even(&u, table);
    let su = combine(&[(&ut, t), (&xu, 1.0)]);
    let s_src_h: Vec<f64> = (0..n).map(|j| ms[j] * hh[j] + m[j] * dhh[j]).collect();
    let term_a = inverse_values(&s_src_h, table);
    let bhh = apply_b_values(&hh, table);
    let left = apply_b_values(&uh, table);
    let comm: Vec<f64> = (0..n).map(|j| left[j] - m[j] * bhh[j]).collect();
    let term_c = inverse_values(&comm, table);
    let r = combine(&[(&su, 1.0), (&term_a, -1.0), (&u, -2.0), (&term_c, -1.0)]);
    Ok(CommutatorResidual {
        residual: norm_x(&r, table),
        reference: norm_x(&su, table),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;
    use crate::potential::Potential;
    use crate::spectral::{build_spectral_table, TableConfig};
    use std::sync::OnceLock;

    /// Even in xi, so that the physical-side function decays fast.
    fn bump(t: &SpectralTable, c: f64, s: f64) -> Vec<f64> {
        t.xi.iter()
            .map(|&k| (-(k - c) * (k - c) / (2.0 * s * s)).exp() + (-(k + c) * (k + c) / (2.0 * s * s)).exp())
            .collect()
    }

    fn free_table() -> &'static SpectralTable {
        static T: OnceLock<SpectralTable> = OnceLock::new();
        T.get_or_init(|| {
            let cfg = TableConfig {
                x_max: 24.0,
                dx: 0.04,
                xi_min: 1e-5,
                xi_max: 10.0,
                // finer than the propagation times need, for quadrature margin
                t_max: 40.0,
                ..Default::default()
            };
            build_spectral_table(&Potential::zero(), &cfg).unwrap()
        })
    }

    #[test]
    fn d_on_simple_functions() {
        let x = linspace(0.0, 5.0, 201);
        let c = GridFunction::from_fn(&x, Parity::Even, |_| 3.0);
        assert!(apply_d(&c).values.iter().all(|v| v.abs() < 1e-12));
        let q = GridFunction::from_fn(&x, Parity::Even, |x| x * x);
        for (v, &t) in apply_d(&q).values.iter().zip(&x) {
            assert!((v - 2.0 * t * t).abs() < 1e-10);
        }
        let g = GridFunction::from_fn(&x, Parity::Even, |x| (-0.5 * x * x).exp());
        for (v, &t) in apply_d(&g).values.iter().zip(&x) {
            assert!((v + t * t * (-0.5 * t * t).exp()).abs() < 1e-5);
        }
    }

    #[test]
    fn free_b_vanishes() {
        let t = free_table();
        for (c, s) in [(1.0, 0.3), (2.5, 0.5), (0.0, 1.0)] {
            let g = bump(t, c, s);
            let bg = apply_b_values(&g, t);
            assert!(norm_rho(&bg, t) < 1e-3 * norm_rho(&g, t));
        }
        let zero = vec![0.0; t.n_xi()];
        assert!(apply_b_values(&zero, t).iter().all(|&v| v == 0.0));
        let k = kernel_f(t);
        assert!(k.f_matrix.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn free_commutators() {
        let t = free_table();
        let f = GridFunction::from_fn(&t.x, Parity::Even, |x| (-x * x).exp());
        let r = commutator_s_cos_residual(&f, 3.0, t).unwrap();
        assert!(r.relative() < 1e-3, "{r:?}");
        let r = commutator_s_sin_residual(&f, 3.0, t).unwrap();
        assert!(r.relative() < 1e-3, "{r:?}");
        let src = SeparableSource {
            temporal: crate::evolution::Temporal::Sin { omega: 1.1 },
            profile: f.values.clone(),
        };
        let r = duhamel_s_commutation_residual(&src, 3.0, t, 201).unwrap();
        assert!(r.relative() < 1e-3, "{r:?}");
        let g = bump(t, 2.0, 0.7);
        let ad = iterated_commutator_addb(1, &g, t).unwrap();
        assert!(norm_rho(&ad, t) < 1e-3 * norm_rho(&g, t), "{} {}", norm_rho(&ad, t), norm_rho(&g, t));
    }

    #[test]
    fn jacobi_consistency() {
        let t = free_table();
        let g = bump(t, 2.0, 0.7);
        let a = iterated_commutator_addb(2, &g, t).unwrap();
        let b = addb2_direct(&g, t);
        let d: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm_rho(&d, t) <= 1e-3 * norm_rho(&b, t).max(norm_rho(&g, t)));
        assert!(iterated_commutator_addb(3, &g, t).is_err());
    }

    /// Brute-force symmetric-pair principal value of int_a^b G(eta)/(xi - eta) d eta.
    fn pv_oracle(g: &dyn Fn(f64) -> f64, xi: f64, a: f64, b: f64) -> f64 {
        let r = (xi - a).min(b - xi);
        let n = 200_000;
        let h = r / n as f64;
        let mut s = 0.0;
        for k in 0..n {
            let e = (k as f64 + 0.5) * h;
            s += h * (g(xi - e) - g(xi + e)) / e;
        }
        // one-sided remainder
        let (lo, hi) = if xi - a > b - xi { (a, xi - r) } else { (xi + r, b) };
        let m = 200_000;
        let hh = (hi - lo) / m as f64;
        for k in 0..m {
            let e = lo + (k as f64 + 0.5) * hh;
            s += hh * g(e) / (xi - e);
        }
        s
    }

    #[test]
    fn b0_matches_dense_pv() {
        let xi = linspace(0.5, 4.5, 801);
        let n = xi.len();
        let kernel = BKernel {
            xi: xi.clone(),
            f_matrix: vec![0.7; n * n],
            u_samples: vec![],
        };
        let rho = vec![2.0 / PI; n];
        let bump = |k: f64| (-(k - 2.5).powi(2) / 0.18).exp();
        let f: Vec<f64> = xi.iter().map(|&k| bump(k)).collect();
        let out = singular_b0(&f, &kernel, &rho, None).unwrap();
        for &i in &[200usize, 350, 400, 430, 600] {
            let x = xi[i];
            let g = |e: f64| 0.7 * 2.0 / PI * bump(e) / (x + e);
            let exact = pv_oracle(&g, x, 0.5, 4.5);
            assert!((out[i] - exact).abs() < 1e-3 * exact.abs().max(0.1), "i {i}: {} vs {exact}", out[i]);
        }
        let h = 0.005;
        let half = singular_b0(&f, &kernel, &rho, Some(h)).unwrap();
        let full = singular_b0(&f, &kernel, &rho, Some(2.0 * h)).unwrap();
        let scale = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 2..n - 2 {
            assert!((half[i] - full[i]).abs() < 1e-3 * scale);
        }
        assert!(matches!(
            singular_b0(&f, &kernel, &rho, Some(0.1)),
            Err(Error::ExclusionTooWide { .. })
        ));
        let zero = singular_b0(&vec![0.0; n], &kernel, &rho, None).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }
}
