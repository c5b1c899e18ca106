//! One-dimensional basis densities centred at zero.
//!
//! `width` is the grid spacing `c` for the uniform and triangular bases and
//! the standard deviation for the Gaussian basis.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Uniform,
    Triangular,
    Gaussian,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Uniform, Basis::Triangular, Basis::Gaussian];

    /// Density at offset `t` from the centre.
    pub fn pdf(self, t: f64, width: f64) -> f64 {
        match self {
            Basis::Uniform => {
                if t.abs() <= width / 2.0 {
                    1.0 / width
                } else {
                    0.0
                }
            }
            Basis::Triangular => {
                let a = t.abs();
                if a < width {
                    (width - a) / (width * width)
                } else {
                    0.0
                }
            }
            Basis::Gaussian => {
                let z = t / width;
                (-0.5 * z * z).exp() / (width * (2.0 * PI).sqrt())
            }
        }
    }

    pub fn cdf(self, t: f64, width: f64) -> f64 {
        match self {
            Basis::Uniform => ((t + width / 2.0) / width).clamp(0.0, 1.0),
            Basis::Triangular => {
                let s = t / width;
                if s <= -1.0 {
                    0.0
                } else if s < 0.0 {
                    0.5 * (1.0 + s) * (1.0 + s)
                } else if s < 1.0 {
                    1.0 - 0.5 * (1.0 - s) * (1.0 - s)
                } else {
                    1.0
                }
            }
            Basis::Gaussian => 0.5 * erfc(-t / (width * SQRT_2)),
        }
    }

    /// Inverse CDF; `u` must lie in (0, 1).
    pub fn quantile(self, u: f64, width: f64) -> f64 {
        match self {
            Basis::Uniform => width * (u - 0.5),
            Basis::Triangular => {
                if u < 0.5 {
                    width * ((2.0 * u).sqrt() - 1.0)
                } else {
                    width * (1.0 - (2.0 * (1.0 - u)).sqrt())
                }
            }
            Basis::Gaussian => {
                if u == 0.5 {
                    0.0
                } else {
                    width * normal_quantile(u)
                }
            }
        }
    }

    pub fn variance(self, width: f64) -> f64 {
        match self {
            Basis::Uniform => width * width / 12.0,
            Basis::Triangular => width * width / 6.0,
            Basis::Gaussian => width * width,
        }
    }
}

/// Standard normal quantile, polished with one Newton step on the
/// erfc-based CDF.
fn normal_quantile(u: f64) -> f64 {
    let x = Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(u);
    let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    if density > 0.0 {
        x - (0.5 * erfc(-x / SQRT_2) - u) / density
    } else {
        x
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Uniform => "uniform",
            Basis::Triangular => "triangular",
            Basis::Gaussian => "gaussian",
        })
    }
}

impl FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Basis::Uniform),
            "triangular" => Ok(Basis::Triangular),
            "gaussian" => Ok(Basis::Gaussian),
            other => Err(format!("unknown basis `{other}`")),
        }
    }
}
