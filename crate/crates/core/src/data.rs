//! Named initial-data profiles used by run configurations and test suites.

use crate::transform::{GridFunction, Parity};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataFunction {
    Zero,
    /// a exp(-x^2 / (2 w^2))
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Gaussians at +-center, even.
    EvenPair {
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// x exp(-x^2 / (2 w^2)), odd.
    OddGaussian {
        #[serde(default = "one")]
        width: f64,
    },
    /// sech(x / w)^2
    Sech2 {
        #[serde(default = "one")]
        width: f64,
    },
    /// (1 + x^2 / w^2) exp(-x^2 / w^2)
    Hermite {
        #[serde(default = "one")]
        width: f64,
    },
    /// exp(-x^2 / (2 w^2)) cos(k x)
    Wavepacket {
        wavenumber: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// exp(-1 / (1 - (x/r)^2)) on |x| < r.
    Bump {
        #[serde(default = "one")]
        radius: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl DataFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            DataFunction::Zero => 0.0,
            DataFunction::Gaussian { amplitude, width } => amplitude * (-x * x / (2.0 * width * width)).exp(),
            DataFunction::EvenPair { center, width } => {
                let g = |d: f64| (-d * d / (2.0 * width * width)).exp();
                g(x - center) + g(x + center)
            }
            DataFunction::OddGaussian { width } => x * (-x * x / (2.0 * width * width)).exp(),
            DataFunction::Sech2 { width } => (x / width).cosh().powi(-2),
            DataFunction::Hermite { width } => {
                let s = x * x / (width * width);
                (1.0 + s) * (-s).exp()
            }
            DataFunction::Wavepacket { wavenumber, width } => {
                (-x * x / (2.0 * width * width)).exp() * (wavenumber * x).cos()
            }
            DataFunction::Bump { radius } => {
                let s = (x / radius).powi(2);
                if s < 1.0 {
                    (-1.0 / (1.0 - s)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn parity(&self) -> Parity {
        match self {
            DataFunction::OddGaussian { .. } => Parity::Odd,
            _ => Parity::Even,
        }
    }

    pub fn sample(&self, x: &[f64]) -> GridFunction {
        GridFunction::from_fn(x, self.parity(), |t| self.eval(t))
    }
}

/// Ten even, rapidly decaying profiles of varied width and frequency content.
pub fn schwartz_suite() -> Vec<DataFunction> {
    vec![
        DataFunction::Gaussian { amplitude: 1.0, width: 1.0 },
        DataFunction::Gaussian { amplitude: 1.0, width: 0.5 },
        DataFunction::Gaussian { amplitude: 2.0, width: 2.0 },
        DataFunction::EvenPair { center: 3.0, width: 0.7 },
        DataFunction::EvenPair { center: 6.0, width: 1.0 },
        DataFunction::Sech2 { width: 1.0 },
        DataFunction::Sech2 { width: 2.0 },
        DataFunction::Hermite { width: 1.0 },
        DataFunction::Hermite { width: 1.5 },
        DataFunction::Wavepacket { wavenumber: 2.0, width: 1.0 },
    ]
}
