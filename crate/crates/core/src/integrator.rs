//! Adaptive Dormand–Prince 5(4) integrator for small real systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|. Zero means unbounded.
    pub h_max: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-10,
            atol: 1e-13,
            h_max: 0.0,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate `y' = rhs(x, y)` from `x0` through every point of `targets`
/// (monotone, in the direction of travel), calling `observe(k, y)` on arrival
/// at `targets[k]`. Steps land exactly on each target.
pub fn integrate<const N: usize, F, O>(
    mut rhs: F,
    x0: f64,
    y0: [f64; N],
    targets: &[f64],
    tol: Tolerance,
    mut observe: O,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
    O: FnMut(usize, &[f64; N]),
{
    let mut x = x0;
    let mut y = y0;
    if targets.is_empty() {
        return Ok(y);
    }
    let dir = if targets[targets.len() - 1] >= x0 { 1.0 } else { -1.0 };
    let span = (targets[targets.len() - 1] - x0).abs().max(1e-300);
    let h_cap = if tol.h_max > 0.0 { tol.h_max } else { f64::INFINITY };
    let mut h = (1e-3 * span).min(h_cap).max(1e-8);
    let h_min = 1e-14 * span.max(1.0);

    let mut k1 = [0.0; N];
    let mut k2 = [0.0; N];
    let mut k3 = [0.0; N];
    let mut k4 = [0.0; N];
    let mut k5 = [0.0; N];
    let mut k6 = [0.0; N];
    let mut k7 = [0.0; N];
    let mut yt = [0.0; N];
    let mut yn = [0.0; N];
    rhs(x, &y, &mut k1);

    for (k, &target) in targets.iter().enumerate() {
        loop {
            let remaining = (target - x) * dir;
            if remaining <= 1e-14 * span {
                break;
            }
            let mut step = h.min(h_cap);
            let last = step >= remaining;
            if last {
                step = remaining;
            }
            let s = step * dir;
            for i in 0..N {
                yt[i] = y[i] + s * A21 * k1[i];
            }
            rhs(x + C2 * s, &yt, &mut k2);
            for i in 0..N {
                yt[i] = y[i] + s * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs(x + C3 * s, &yt, &mut k3);
            for i in 0..N {
                yt[i] = y[i] + s * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs(x + C4 * s, &yt, &mut k4);
            for i in 0..N {
                yt[i] = y[i] + s * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs(x + C5 * s, &yt, &mut k5);
            for i in 0..N {
                yt[i] = y[i]
                    + s * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let x_new = if last { target } else { x + s };
            rhs(x + s, &yt, &mut k6);
            for i in 0..N {
                yn[i] = y[i]
                    + s * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            rhs(x_new, &yn, &mut k7);
            let mut err = 0.0f64;
            for i in 0..N {
                let e = s
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = tol.atol + tol.rtol * y[i].abs().max(yn[i].abs());
                let r = e / sc;
                err += r * r;
            }
            err = (err / N as f64).sqrt();
            if !err.is_finite() {
                h = step * 0.2;
                if h < h_min {
                    return Err(Error::StepFailure { x, h });
                }
                continue;
            }
            if err <= 1.0 {
                x = x_new;
                y = yn;
                k1 = k7;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a truncated final step says nothing about the natural step size
                if !last {
                    h = step * fac;
                } else {
                    h = h.max(step * fac);
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
                if h < h_min {
                    return Err(Error::StepFailure { x, h });
                }
            }
        }
        observe(k, &y);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let w = 3.0;
        let t_end = 2.0 * std::f64::consts::PI / w;
        let targets: Vec<f64> = (1..=10).map(|i| t_end * i as f64 / 10.0).collect();
        let mut worst = 0.0f64;
        integrate(
            |_t, y: &[f64; 2], dy: &mut [f64; 2]| {
                dy[0] = y[1];
                dy[1] = -w * w * y[0];
            },
            0.0,
            [1.0, 0.0],
            &targets,
            Tolerance::default(),
            |k, y| {
                worst = worst.max((y[0] - (w * targets[k]).cos()).abs());
            },
        )
        .unwrap();
        assert!(worst < 1e-9, "worst {worst}");
    }

    #[test]
    fn backward_integration_lands_on_targets() {
        let targets = [1.5, 1.0, 0.25, 0.0];
        let mut seen = vec![];
        let y = integrate(
            |_x, y: &[f64; 1], dy: &mut [f64; 1]| dy[0] = y[0],
            2.0,
            [2f64.exp()],
            &targets,
            Tolerance::default(),
            |k, y| seen.push((k, y[0])),
        )
        .unwrap();
        assert_eq!(seen.len(), 4);
        for (k, v) in seen {
            assert!((v - targets[k].exp()).abs() < 1e-9);
        }
        assert!((y[0] - 1.0).abs() < 1e-9);
    }
}
