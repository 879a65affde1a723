//! Aggregation kernels `K(x, y)`: the rate at which aggregates of volumes `x`
//! and `y` merge into one of volume `x + y`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

type RateFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A user supplied symmetric, positive, homogeneous kernel.
#[derive(Clone)]
pub struct CustomKernel {
    name: String,
    degree: f64,
    rate: Arc<RateFn>,
}

impl CustomKernel {
    /// `rate` must be symmetric and positive for positive arguments and satisfy
    /// `rate(λx, λy) = λ^degree rate(x, y)`.
    pub fn new(
        name: impl Into<String>,
        degree: f64,
        rate: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            degree,
            rate: Arc::new(rate),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Kernel {
    /// `K(x, y) = 1`
    Constant,
    /// `K(x, y) = x y`
    Multiplicative,
    Custom(CustomKernel),
}

impl Kernel {
    /// Checked evaluation; both volumes must be positive and finite.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && x.is_finite() && y > 0.0 && y.is_finite()) {
            return Err(Error::Domain(format!(
                "kernel arguments must be positive and finite, got ({x}, {y})"
            )));
        }
        Ok(self.rate(x, y))
    }

    /// Unchecked evaluation used inside quadrature loops.
    #[inline]
    pub(crate) fn rate(&self, x: f64, y: f64) -> f64 {
        match self {
            Kernel::Constant => 1.0,
            Kernel::Multiplicative => x * y,
            Kernel::Custom(k) => (k.rate)(x, y),
        }
    }

    pub fn homogeneity_degree(&self) -> f64 {
        match self {
            Kernel::Constant => 0.0,
            Kernel::Multiplicative => 2.0,
            Kernel::Custom(k) => k.degree,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Kernel::Constant => "constant",
            Kernel::Multiplicative => "multiplicative",
            Kernel::Custom(k) => k.name(),
        }
    }

    /// True for the kernels with hand-integrated element formulas.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self, Kernel::Custom(_))
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(Kernel::Constant),
            "multiplicative" => Ok(Kernel::Multiplicative),
            other => Err(Error::Config(format!(
                "unknown kernel '{other}' (expected 'constant' or 'multiplicative')"
            ))),
        }
    }
}
