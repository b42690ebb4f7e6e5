//! Kernel functions and their gradients with respect to the first argument.
//!
//! The shifted chi2 kernel compares histograms,
//!
//! ```text
//! k(a, x) = Σ_c 2·a_c·x_c / (|a_c| + |x_c|)
//! ∂k/∂a_c = 2·x_c·|x_c| / (|x_c| + |a_c|)²
//! ```
//!
//! with every term whose denominator vanishes taken to be 0. The linear kernel
//! is the plain dot product; with it a landmark model reduces exactly to a
//! linear projection.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{check_dim, dot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum KernelId {
    #[default]
    Chi2,
    Linear,
}

impl KernelId {
    pub fn token(self) -> &'static str {
        match self {
            KernelId::Chi2 => "chi2",
            KernelId::Linear => "linear",
        }
    }

    /// `k(a, x)`. Fails if the lengths differ.
    pub fn value(self, a: &[f64], x: &[f64]) -> Result<f64> {
        check_dim(a.len(), x.len())?;
        Ok(self.value_unchecked(a, x))
    }

    /// `∇_a k(a, x)`. Fails if the lengths differ.
    pub fn gradient(self, a: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_dim(a.len(), x.len())?;
        let mut out = vec![0.0; a.len()];
        self.gradient_into(a, x, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn value_unchecked(self, a: &[f64], x: &[f64]) -> f64 {
        match self {
            KernelId::Chi2 => chi2_value(a, x),
            KernelId::Linear => dot(a, x),
        }
    }

    /// Writes `∇_a k(a, x)` into `out`; all three slices share one length.
    #[inline]
    pub(crate) fn gradient_into(self, a: &[f64], x: &[f64], out: &mut [f64]) {
        match self {
            KernelId::Chi2 => {
                for ((o, &ac), &xc) in out.iter_mut().zip(a).zip(x) {
                    let den = xc.abs() + ac.abs();
                    *o = if den == 0.0 {
                        0.0
                    } else {
                        2.0 * xc * xc.abs() / (den * den)
                    };
                }
            }
            KernelId::Linear => out.copy_from_slice(x),
        }
    }
}

#[inline]
fn chi2_value(a: &[f64], x: &[f64]) -> f64 {
    a.iter()
        .zip(x)
        .map(|(&ac, &xc)| {
            let den = ac.abs() + xc.abs();
            if den == 0.0 {
                0.0
            } else {
                2.0 * ac * xc / den
            }
        })
        .sum()
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi2" => Ok(KernelId::Chi2),
            "linear" => Ok(KernelId::Linear),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }
}
