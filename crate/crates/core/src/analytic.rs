//! Closed-form solutions of the coagulation equation used as references.
//!
//! * constant kernel: `f(t, x) = (2/(2+t))² exp(-2x/(2+t))`
//! * multiplicative kernel: `f(t, x) = exp(-T(t) x) I₁(2x√t) / (x² √t)` with
//!   `T(t) = 1 + t` for `t ≤ 1` and `2√t` afterwards; `f(0, x) = e^{-x}/x`.
//!
//! Both start from a unit-mass exponential volume distribution. The
//! multiplicative solution gels at `t = 1`.

use crate::error::{Error, Result};
use crate::mesh::Grid;
use crate::specfun::{adaptive_integrate, bessel_i1_scaled, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticSolution {
    Constant,
    Multiplicative,
}

impl AnalyticSolution {
    /// Number density `f(t, x)`.
    pub fn eval_f(&self, t: f64, x: f64) -> Result<f64> {
        check_time(t)?;
        match self {
            AnalyticSolution::Constant => {
                if !(x >= 0.0) {
                    return Err(Error::Domain(format!("x must be >= 0, got {x}")));
                }
                let s = 2.0 / (2.0 + t);
                Ok(s * s * (-s * x).exp())
            }
            AnalyticSolution::Multiplicative => {
                if !(x > 0.0) {
                    return Err(Error::Domain(format!(
                        "multiplicative solution needs x > 0, got {x}"
                    )));
                }
                if t == 0.0 {
                    return Ok((-x).exp() / x);
                }
                let rt = t.sqrt();
                let z = 2.0 * x * rt;
                // exp(-T x + z) folded into a single exponent:
                // t <= 1: -(1 + t) x + 2 x √t = -x (1 - √t)²;  t > 1: exactly 0.
                let exponent = if t <= 1.0 {
                    let d = 1.0 - rt;
                    -x * d * d
                } else {
                    0.0
                };
                Ok(exponent.exp() * bessel_i1_scaled(z)? / (x * x * rt))
            }
        }
    }

    /// Volume density `g(t, x) = x f(t, x)`.
    pub fn eval_g(&self, t: f64, x: f64) -> Result<f64> {
        Ok(x * self.eval_f(t, x)?)
    }

    /// `(1/Δx) ∫ f(t, y) dy` over element `e`.
    pub fn element_average_f(&self, grid: &Grid, e: usize, t: f64, quad: &QuadratureSpec) -> Result<f64> {
        check_element(grid, e)?;
        check_time(t)?;
        let (a, b) = grid.element(e);
        match self {
            AnalyticSolution::Constant => {
                let s = 2.0 / (2.0 + t);
                Ok(s * ((-s * a).exp() - (-s * b).exp()) / grid.dx())
            }
            AnalyticSolution::Multiplicative => {
                Ok(self.integrate(a, b, t, quad, |_, f| f)? / grid.dx())
            }
        }
    }

    /// `(1/Δx) ∫ y f(t, y) dy` over element `e`.
    pub fn element_average_g(&self, grid: &Grid, e: usize, t: f64, quad: &QuadratureSpec) -> Result<f64> {
        check_element(grid, e)?;
        check_time(t)?;
        let (a, b) = grid.element(e);
        match self {
            AnalyticSolution::Constant => {
                let s = 2.0 / (2.0 + t);
                let (sa, sb) = (s * a, s * b);
                Ok(((sa + 1.0) * (-sa).exp() - (sb + 1.0) * (-sb).exp()) / grid.dx())
            }
            AnalyticSolution::Multiplicative if t == 0.0 => {
                Ok(((-a).exp() - (-b).exp()) / grid.dx())
            }
            AnalyticSolution::Multiplicative => {
                Ok(self.integrate(a, b, t, quad, |y, f| y * f)? / grid.dx())
            }
        }
    }

    pub fn element_averages_f(&self, grid: &Grid, t: f64, quad: &QuadratureSpec) -> Result<Vec<f64>> {
        (0..grid.n_elements())
            .map(|e| self.element_average_f(grid, e, t, quad))
            .collect()
    }

    pub fn element_averages_g(&self, grid: &Grid, t: f64, quad: &QuadratureSpec) -> Result<Vec<f64>> {
        (0..grid.n_elements())
            .map(|e| self.element_average_g(grid, e, t, quad))
            .collect()
    }

    /// Partial zeroth and first moments `∫ f`, `∫ x f` over the grid domain.
    pub fn moments(&self, grid: &Grid, t: f64, quad: &QuadratureSpec) -> Result<(f64, f64)> {
        let m0 = self.element_averages_f(grid, t, quad)?.iter().sum::<f64>() * grid.dx();
        let m1 = self.element_averages_g(grid, t, quad)?.iter().sum::<f64>() * grid.dx();
        Ok((m0, m1))
    }

    fn integrate(
        &self,
        a: f64,
        b: f64,
        t: f64,
        quad: &QuadratureSpec,
        weight: impl Fn(f64, f64) -> f64,
    ) -> Result<f64> {
        let mut failure = None;
        let value = adaptive_integrate(
            |y| match self.eval_f(t, y) {
                Ok(f) => weight(y, f),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
            quad,
        );
        match failure {
            Some(e) => Err(e),
            None => value,
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

fn check_element(grid: &Grid, e: usize) -> Result<()> {
    if e >= grid.n_elements() {
        return Err(Error::Domain(format!(
            "element {e} out of range for {} elements",
            grid.n_elements()
        )));
    }
    Ok(())
}
