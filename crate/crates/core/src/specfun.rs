//! Order-zero Bessel functions and the normalized Hankel solutions h±.
//!
//! Three regimes: power series for z <= 8, Steed's continued fractions for
//! 8 < z < 25, and the Hankel asymptotic expansion for z >= 25.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

pub type ComplexValue = Complex64;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// gamma - log 2, the constant in the small-argument law of Y0.
pub const GAMMA0: f64 = EULER_GAMMA - std::f64::consts::LN_2;

const SERIES_MAX: f64 = 8.0;
const ASYMPTOTIC_MIN: f64 = 25.0;

#[derive(Debug, Clone, Copy)]
struct Bessel0 {
    j: f64,
    dj: f64,
    y: f64,
    dy: f64,
}

fn series(z: f64) -> Bessel0 {
    let q = -0.25 * z * z;
    let mut t = 1.0;
    let mut j = 1.0;
    let mut dj = 0.0;
    let mut hsum = 0.0;
    let mut dhsum = 0.0;
    let mut harmonic = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        t *= q / (kf * kf);
        harmonic += 1.0 / kf;
        j += t;
        dj += t * 2.0 * kf / z;
        hsum += harmonic * t;
        dhsum += harmonic * t * 2.0 * kf / z;
        if t.abs() < 1e-18 * j.abs().max(1e-3) && k > 3 {
            break;
        }
    }
    let l = (0.5 * z).ln() + EULER_GAMMA;
    let y = (2.0 / PI) * (l * j - hsum);
    let dy = (2.0 / PI) * (j / z + l * dj - dhsum);
    Bessel0 { j, dj, y, dy }
}

/// Steed's method for order zero, valid for z >= 2.
fn steed(x: f64) -> Bessel0 {
    const EPS: f64 = 1e-16;
    const FPMIN: f64 = 1e-300;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;
    // CF1: f = J0'/J0
    let mut isign = 1.0;
    let mut h = FPMIN;
    let mut b = 0.0;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..100_000 {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    let rjl = isign * FPMIN;
    let f = h;
    // CF2: p + iq = (J0' + iY0') / (J0 + iY0)
    let mut a = 0.25;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    for i in 2..100_000 {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di = -di / den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        temp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = temp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            break;
        }
    }
    let gam = (p - f) / q;
    let mut j = (w / ((p - f) * gam + q)).sqrt();
    if rjl < 0.0 {
        j = -j;
    }
    let y = j * gam;
    let dy = y * (p + q / gam);
    Bessel0 { j, dj: f * j, y, dy }
}

/// Coefficients i^k a_k of h+(z) = e^{iz} sum_k i^k a_k z^{-k}, truncated at the smallest term.
fn asymptotic_w(z: f64) -> (Complex64, Complex64) {
    let mut w = Complex64::new(1.0, 0.0);
    let mut dw = Complex64::new(0.0, 0.0);
    let mut coef = 1.0f64;
    let mut ipow = Complex64::new(1.0, 0.0);
    let mut zpow = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..40 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        coef *= -odd * odd / (8.0 * kf);
        ipow *= Complex64::new(0.0, 1.0);
        zpow /= z;
        let term = ipow * (coef * zpow);
        let mag = term.norm();
        if mag >= last {
            break;
        }
        w += term;
        dw += term * (-kf / z);
        last = mag;
        if mag < 1e-18 {
            break;
        }
    }
    (w, dw)
}

fn asymptotic(z: f64) -> Bessel0 {
    let (w, dw) = asymptotic_w(z);
    let e = Complex64::from_polar(1.0, z);
    let h = e * w;
    let dh = e * (Complex64::new(0.0, 1.0) * w + dw);
    let c = Complex64::from_polar(FRAC_PI_2.sqrt(), FRAC_PI_4) * z.sqrt();
    let hank = h / c;
    let dhank = (dh - h / (2.0 * z)) / c;
    Bessel0 {
        j: hank.re,
        dj: dhank.re,
        y: hank.im,
        dy: dhank.im,
    }
}

fn bessel0(z: f64) -> Bessel0 {
    if z <= SERIES_MAX {
        series(z)
    } else if z < ASYMPTOTIC_MIN {
        steed(z)
    } else {
        asymptotic(z)
    }
}

/// J0(z). Even in z, so negative arguments are folded.
pub fn bessel_j0(z: f64) -> f64 {
    let z = z.abs();
    if z == 0.0 {
        return 1.0;
    }
    bessel0(z).j
}

/// J0'(z) = -J1(z).
pub fn bessel_j0_prime(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let s = z.signum();
    s * bessel0(z.abs()).dj
}

pub fn bessel_y0(z: f64) -> Result<f64> {
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::DomainError(z));
    }
    Ok(bessel0(z).y)
}

pub fn bessel_y0_prime(z: f64) -> Result<f64> {
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::DomainError(z));
    }
    Ok(bessel0(z).dy)
}

/// h±(z) = sqrt(pi/2) e^{±i pi/4} sqrt(z) (J0(z) ± i Y0(z)), and its z-derivative.
pub fn hankel_h_with_prime(z: f64, sign: i32) -> Result<(ComplexValue, ComplexValue)> {
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::DomainError(z));
    }
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    let (h, dh) = if z >= ASYMPTOTIC_MIN {
        let (w, dw) = asymptotic_w(z);
        let e = Complex64::from_polar(1.0, z);
        (e * w, e * (Complex64::new(0.0, 1.0) * w + dw))
    } else {
        let b = bessel0(z);
        let c = Complex64::from_polar(FRAC_PI_2.sqrt(), FRAC_PI_4);
        let hank = Complex64::new(b.j, b.y);
        let dhank = Complex64::new(b.dj, b.dy);
        let rz = z.sqrt();
        (c * rz * hank, c * (hank / (2.0 * rz) + rz * dhank))
    };
    if s > 0.0 {
        Ok((h, dh))
    } else {
        Ok((h.conj(), dh.conj()))
    }
}

pub fn hankel_h(z: f64, sign: i32) -> Result<ComplexValue> {
    hankel_h_with_prime(z, sign).map(|p| p.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an independent arbitrary-precision evaluation.
    const J0_REF: [(f64, f64); 6] = [
        (1.0, 0.765_197_686_557_966_6),
        (5.0, -0.177_596_771_314_338_3),
        (10.0, -0.245_935_764_451_348_3),
        (20.0, 0.167_024_664_340_583_15),
        (30.0, -0.086_367_983_581_040_2),
        (100.0, 0.019_985_850_304_223_12),
    ];
    const Y0_REF: [(f64, f64); 6] = [
        (1.0, 0.088_256_964_215_676_96),
        (5.0, -0.308_517_625_249_033_78),
        (10.0, 0.055_671_167_283_599_39),
        (20.0, 0.062_640_596_809_383_83),
        (30.0, -0.117_295_731_686_664_03),
        (100.0, -0.077_244_313_365_083_15),
    ];

    #[test]
    fn reference_values() {
        assert_eq!(bessel_j0(0.0), 1.0);
        for (z, v) in J0_REF {
            assert!((bessel_j0(z) - v).abs() < 1e-12, "J0({z})");
        }
        for (z, v) in Y0_REF {
            assert!((bessel_y0(z).unwrap() - v).abs() < 1e-12, "Y0({z})");
        }
    }

    #[test]
    fn y0_domain() {
        assert!(matches!(bessel_y0(0.0), Err(Error::DomainError(_))));
        assert!(hankel_h(0.0, 1).is_err());
    }

    #[test]
    fn y0_small_argument_law() {
        let z = 1e-6;
        let d = bessel_y0(z).unwrap() - (2.0 / PI) * ((z / 2.0).ln() + EULER_GAMMA);
        assert!(d.abs() < 1e-10);
    }

    #[test]
    fn bessel_wronskian() {
        for z in [0.5, 5.0, 12.0, 50.0] {
            let w = bessel_j0(z) * bessel_y0_prime(z).unwrap()
                - bessel_j0_prime(z) * bessel_y0(z).unwrap();
            assert!((w - 2.0 / (PI * z)).abs() < 1e-9 * (2.0 / (PI * z)).max(1.0), "z={z}");
        }
    }

    #[test]
    fn branches_agree_on_switchover_bands() {
        for i in 0..=40 {
            let z = 7.5 + i as f64 * 0.025;
            let a = series(z);
            let b = steed(z);
            assert!((a.j - b.j).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12, "z={z}");
            assert!((a.dj - b.dj).abs() < 1e-11 && (a.dy - b.dy).abs() < 1e-11, "z={z}");
        }
        for i in 0..=40 {
            let z = 24.0 + i as f64 * 0.05;
            let a = steed(z);
            let b = asymptotic(z);
            assert!((a.j - b.j).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12, "z={z}");
            assert!((a.dj - b.dj).abs() < 1e-12 && (a.dy - b.dy).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn hankel_asymptotics() {
        let h = hankel_h(50.0, 1).unwrap();
        assert!((h * Complex64::from_polar(1.0, -50.0) - 1.0).norm() < 0.01);
        for z in [0.3, 3.0, 30.0] {
            let p = hankel_h(z, 1).unwrap();
            let m = hankel_h(z, -1).unwrap();
            assert!((p.conj() - m).norm() < 1e-15);
        }
        // |h+(z)| <~ z^{1/2} log(1/z) near the origin
        for z in [1e-2f64, 1e-4, 1e-8, 1e-12] {
            let bound = z.sqrt() * (1.0 + z.ln().abs());
            assert!(hankel_h(z, 1).unwrap().norm() <= bound, "z={z}");
        }
    }

    #[test]
    fn hankel_wronskian_is_constant() {
        // W(h+, h-) = -2i for the normalized pair
        for z in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let (p, dp) = hankel_h_with_prime(z, 1).unwrap();
            let (m, dm) = hankel_h_with_prime(z, -1).unwrap();
            let w = p * dm - dp * m;
            assert!((w - Complex64::new(0.0, -2.0)).norm() < 1e-9, "z={z} w={w}");
        }
    }

    #[test]
    fn large_argument_envelope() {
        for i in 0..200 {
            let z = 10.0 + i as f64 * 0.37;
            assert!(bessel_j0(z).abs() <= (2.0 / (PI * z)).sqrt() * 1.1);
        }
    }
}
