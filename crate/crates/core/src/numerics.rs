//! Quadrature weights, finite-difference stencils and small fitting helpers.

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Composite Simpson weights on `n` uniform nodes with spacing `h`.
///
/// An even node count closes the last three intervals with the 3/8 rule.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 => return w,
        1 => return w,
        2 => {
            w[0] = h / 2.0;
            w[1] = h / 2.0;
            return w;
        }
        3 => {
            w[0] = h / 3.0;
            w[1] = 4.0 * h / 3.0;
            w[2] = h / 3.0;
            return w;
        }
        _ => {}
    }
    let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
    for i in 0..simpson_end {
        if i % 2 == 0 {
            w[i] += h / 3.0;
            w[i + 1] += 4.0 * h / 3.0;
            w[i + 2] += h / 3.0;
        }
    }
    if n % 2 == 0 {
        let s = simpson_end;
        let c = 3.0 * h / 8.0;
        w[s] += c;
        w[s + 1] += 3.0 * c;
        w[s + 2] += 3.0 * c;
        w[s + 3] += c;
    }
    w
}

/// Trapezoid weights on an arbitrary increasing grid.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = x[i + 1] - x[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Finite-difference weights for the `m`-th derivative at `x0` from nodes `xs` (Fornberg).
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// How a stencil treats the left end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeftBoundary {
    /// Fold ghost nodes back with f(-x) = f(x). Requires the grid to start at 0.
    Even,
    /// Fold ghost nodes back with f(-x) = -f(x).
    Odd,
    OneSided,
}

/// Sparse derivative operator: each row lists (column, weight) pairs.
#[derive(Debug, Clone)]
pub struct DiffOp {
    rows: Vec<Vec<(usize, f64)>>,
}

impl DiffOp {
    /// Five-point derivative of order `order` on `x`.
    pub fn new(x: &[f64], order: usize, left: LeftBoundary) -> Self {
        let n = x.len();
        assert!(n >= 5, "stencil needs at least five nodes");
        let half = 2usize;
        let reflect = matches!(left, LeftBoundary::Even | LeftBoundary::Odd);
        if reflect {
            debug_assert!(x[0].abs() < 1e-14);
        }
        let sign = if left == LeftBoundary::Odd { -1.0 } else { 1.0 };
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);
            if reflect && i < half {
                // centered stencil with ghost nodes at -x[k]
                let mut nodes = Vec::with_capacity(5);
                let mut idx: Vec<(usize, f64)> = Vec::with_capacity(5);
                for k in (i as isize - 2)..=(i as isize + 2) {
                    if k < 0 {
                        let kk = (-k) as usize;
                        nodes.push(-x[kk]);
                        idx.push((kk, sign));
                    } else {
                        nodes.push(x[k as usize]);
                        idx.push((k as usize, 1.0));
                    }
                }
                let w = fornberg_weights(x[i], &nodes, order);
                for ((col, s), wk) in idx.into_iter().zip(w) {
                    push_merge(&mut row, col, s * wk);
                }
            } else {
                let start = i.saturating_sub(half).min(n - 5);
                let nodes = &x[start..start + 5];
                let w = fornberg_weights(x[i], nodes, order);
                for (k, wk) in w.into_iter().enumerate() {
                    row.push((start + k, wk));
                }
            }
            rows.push(row);
        }
        DiffOp { rows }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, w)| w * f[j]).sum())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn push_merge(row: &mut Vec<(usize, f64)>, col: usize, w: f64) {
    if let Some(e) = row.iter_mut().find(|e| e.0 == col) {
        e.1 += w;
    } else {
        row.push((col, w));
    }
}

/// Least-squares line with a 95% confidence half-width on the slope.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_halfwidth: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_halfwidth = if n > 2 {
        let sse: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::NAN);
        t * se
    } else {
        f64::INFINITY
    };
    Some(LineFit {
        slope,
        intercept,
        slope_halfwidth,
    })
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Japanese bracket <x> = sqrt(1 + x^2).
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_cubics_exactly() {
        for n in [5usize, 6, 7, 10, 11] {
            let h = 2.0 / (n - 1) as f64;
            let w = simpson_weights(n, h);
            let s: f64 = (0..n)
                .map(|i| {
                    let x = i as f64 * h;
                    w[i] * (x * x * x - x + 1.0)
                })
                .sum();
            assert!((s - (4.0 - 2.0 + 2.0)).abs() < 1e-13, "n={n} s={s}");
        }
    }

    #[test]
    fn fornberg_matches_classic_five_point() {
        let xs = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let w = fornberg_weights(0.0, &xs, 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let w2 = fornberg_weights(0.0, &xs, 2);
        let expect2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w2.iter().zip(expect2) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn even_reflection_zeroes_derivative_at_origin() {
        let x = linspace(0.0, 4.0, 81);
        let f: Vec<f64> = x.iter().map(|v| (-v * v).exp()).collect();
        let d = DiffOp::new(&x, 1, LeftBoundary::Even).apply(&f);
        assert!(d[0].abs() < 1e-15);
        for (i, xv) in x.iter().enumerate() {
            let exact = -2.0 * xv * (-xv * xv).exp();
            assert!((d[i] - exact).abs() < 1e-4, "i={i}");
        }
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let f = fit_line(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.slope_halfwidth < 1e-10);
    }
}
