//! Moments, grid error norms, convergence-order fits and floating-point
//! operation counting.

use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::flfm;
use crate::kernel::Kernel;
use crate::mesh::Grid;

/// Which discretization produced a state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Element averages of the number density `f`.
    Fem,
    /// Element averages of the volume density `g = x f`.
    Flfm,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Fem => "fem",
            Scheme::Flfm => "flfm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentOrder {
    Zeroth,
    First,
}

/// Partial moments of a discrete state over the grid domain.
///
/// | scheme | zeroth                         | first                         |
/// |--------|--------------------------------|-------------------------------|
/// | FEM    | `Δx Σ f_i`                     | `½ Σ f_i (x_{i+1}² − x_i²)`   |
/// | FLFM   | `Σ g_i ln(x_{i+1}/x_i)`        | `Δx Σ g_i`                    |
pub fn partial_moment(order: MomentOrder, scheme: Scheme, values: &[f64], grid: &Grid) -> Result<f64> {
    if values.len() != grid.n_elements() {
        return Err(Error::LengthMismatch {
            expected: grid.n_elements(),
            got: values.len(),
        });
    }
    let x = grid.boundaries();
    let dx = grid.dx();
    let value = match (scheme, order) {
        (Scheme::Fem, MomentOrder::Zeroth) => dx * values.iter().sum::<f64>(),
        (Scheme::Fem, MomentOrder::First) => {
            0.5 * values
                .iter()
                .enumerate()
                .map(|(e, f)| f * (x[e + 1] * x[e + 1] - x[e] * x[e]))
                .sum::<f64>()
        }
        (Scheme::Flfm, MomentOrder::Zeroth) => {
            if !(x[0] > 0.0) {
                return Err(Error::LogSingularity(
                    "FLFM zeroth moment needs x_min > 0".into(),
                ));
            }
            values
                .iter()
                .enumerate()
                .map(|(e, g)| g * (x[e + 1] / x[e]).ln())
                .sum::<f64>()
        }
        (Scheme::Flfm, MomentOrder::First) => dx * values.iter().sum::<f64>(),
    };
    Ok(value)
}

/// Time series of the zeroth and first partial moments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub m0: Vec<f64>,
    pub m1: Vec<f64>,
}

impl MomentSeries {
    pub fn push(&mut self, t: f64, m0: f64, m1: f64) {
        self.times.push(t);
        self.m0.push(m0);
        self.m1.push(m1);
    }

    pub fn from_states<'a>(
        scheme: Scheme,
        grid: &Grid,
        samples: impl IntoIterator<Item = (f64, &'a [f64])>,
    ) -> Result<Self> {
        let mut series = Self::default();
        for (t, state) in samples {
            let m0 = partial_moment(MomentOrder::Zeroth, scheme, state, grid)?;
            let m1 = partial_moment(MomentOrder::First, scheme, state, grid)?;
            series.push(t, m0, m1);
        }
        Ok(series)
    }
}

/// `‖e(t_k)‖₁` sampled over time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Discrete L¹ grid-function norm `Δx Σ |approx_i − reference_i|`.
pub fn grid_error_norm(approx: &[f64], reference: &[f64], dx: f64) -> Result<f64> {
    if approx.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            got: approx.len(),
        });
    }
    Ok(dx * approx.iter().zip(reference).map(|(a, r)| (a - r).abs()).sum::<f64>())
}

/// Least-squares slope of `log(error)` against `log(dx)`.
pub fn estimate_order(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::Domain(format!(
            "order fit needs at least two points, got {}",
            pairs.len()
        )));
    }
    if let Some(&(h, e)) = pairs.iter().find(|&&(h, e)| !(h > 0.0 && e > 0.0)) {
        return Err(Error::Domain(format!(
            "order fit needs positive spacing and error, got ({h}, {e})"
        )));
    }
    let n = pairs.len() as f64;
    let lx: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("order fit needs distinct spacings".into()));
    }
    Ok(sxy / sxx)
}

/// Orders between consecutive refinements, `log(e_k/e_{k+1}) / log(h_k/h_{k+1})`.
pub fn pairwise_orders(pairs: &[(f64, f64)]) -> Result<Vec<f64>> {
    pairs.windows(2).map(|w| estimate_order(w)).collect()
}

/// Sink for arithmetic counts. The default methods do nothing so uncounted
/// assembly compiles to the same arithmetic as the counted one.
pub trait OpTally {
    #[inline(always)]
    fn add(&mut self, _n: u64) {}
    #[inline(always)]
    fn mul(&mut self, _n: u64) {}
    #[inline(always)]
    fn div(&mut self, _n: u64) {}
    #[inline(always)]
    fn special(&mut self, _n: u64) {}
}

/// Discards all counts.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoTally;

impl OpTally for NoTally {}

/// Integer operation counters. Additions and subtractions share `adds`;
/// `special` covers `ln`, `exp`, Bessel and kernel-integral evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    pub adds: u64,
    pub muls: u64,
    pub divs: u64,
    pub special: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.adds + self.muls + self.divs + self.special
    }
}

impl AddAssign for OpCount {
    fn add_assign(&mut self, rhs: Self) {
        self.adds += rhs.adds;
        self.muls += rhs.muls;
        self.divs += rhs.divs;
        self.special += rhs.special;
    }
}

impl OpTally for OpCount {
    fn add(&mut self, n: u64) {
        self.adds += n;
    }
    fn mul(&mut self, n: u64) {
        self.muls += n;
    }
    fn div(&mut self, n: u64) {
        self.divs += n;
    }
    fn special(&mut self, n: u64) {
        self.special += n;
    }
}

/// Result of a counted right-hand-side evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum CountedOutput {
    /// FEM rate vector `df_i/dt`.
    Rates(Vec<f64>),
    /// FLFM boundary fluxes `J_i`.
    Flux(Vec<f64>),
}

/// Evaluates one right-hand side from scratch while counting every arithmetic
/// operation.
///
/// For the FEM this builds the operator (its per-element geometric factors)
/// and assembles the rates once. For the FLFM it runs the direct triple sum of
/// [`flfm::compute_flux_naive`], evaluating each inner kernel integral in place.
/// Integrator overhead is not included.
pub fn counted_rhs(scheme: Scheme, values: &[f64], grid: &Grid, kernel: &Kernel) -> Result<(CountedOutput, OpCount)> {
    if values.len() != grid.n_elements() {
        return Err(Error::LengthMismatch {
            expected: grid.n_elements(),
            got: values.len(),
        });
    }
    let mut count = OpCount::default();
    let out = match scheme {
        Scheme::Fem => {
            let op = crate::fem::FemOperator::build(grid.clone(), kernel.clone(), &Default::default(), &mut count)?;
            let mut rates = vec![0.0; values.len()];
            op.rhs_into(values, &mut rates, &mut count);
            CountedOutput::Rates(rates)
        }
        Scheme::Flfm => CountedOutput::Flux(flfm::compute_flux_naive(values, grid, kernel, &mut count)?),
    };
    Ok((out, count))
}
