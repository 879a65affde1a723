//! Uniform partitions of the truncated volume domain `[x_min, x_max]`.
//!
//! Boundaries are indexed `0..n_boundaries`, elements `0..n_elements` with
//! element `e` spanning `[x[e], x[e + 1])`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    boundaries: Vec<f64>,
    dx: f64,
}

impl Grid {
    /// Builds `n_boundaries` equally spaced boundaries from `x_min` to `x_max`.
    ///
    /// Each coordinate is `x_min + k * dx`; nothing is accumulated.
    pub fn uniform(x_min: f64, x_max: f64, n_boundaries: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "bounds must be finite, got [{x_min}, {x_max}]"
            )));
        }
        if x_min < 0.0 || x_max <= x_min {
            return Err(Error::InvalidDomain(format!(
                "need x_max > x_min >= 0, got [{x_min}, {x_max}]"
            )));
        }
        if n_boundaries < 3 {
            return Err(Error::TooFewElements(n_boundaries));
        }
        let dx = (x_max - x_min) / (n_boundaries - 1) as f64;
        let mut boundaries: Vec<f64> = (0..n_boundaries)
            .map(|k| x_min + k as f64 * dx)
            .collect();
        boundaries[n_boundaries - 1] = x_max;
        Ok(Self { boundaries, dx })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_boundaries(&self) -> usize {
        self.boundaries.len()
    }

    pub fn n_elements(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn x_min(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn x_max(&self) -> f64 {
        self.boundaries[self.boundaries.len() - 1]
    }

    /// Left and right boundary of element `e`.
    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.boundaries[e], self.boundaries[e + 1])
    }

    pub fn midpoint(&self, e: usize) -> f64 {
        0.5 * (self.boundaries[e] + self.boundaries[e + 1])
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n_elements()).map(|e| self.midpoint(e)).collect()
    }

    /// Number of fine elements per coarse element when `self` refines `coarse`.
    pub fn refinement_ratio(&self, coarse: &Grid) -> Result<usize> {
        let tol = 1e-12 * self.x_max().abs().max(1.0);
        if (self.x_min() - coarse.x_min()).abs() > tol || (self.x_max() - coarse.x_max()).abs() > tol
        {
            return Err(Error::IncompatibleGrid(format!(
                "domains differ: [{}, {}] vs [{}, {}]",
                self.x_min(),
                self.x_max(),
                coarse.x_min(),
                coarse.x_max()
            )));
        }
        let (nf, nc) = (self.n_elements(), coarse.n_elements());
        if nf < nc || nf % nc != 0 {
            return Err(Error::IncompatibleGrid(format!(
                "{nf} fine elements do not nest into {nc} coarse elements"
            )));
        }
        Ok(nf / nc)
    }
}

/// Averages fine-element values onto the coarse elements that contain them.
///
/// Both schemes evolve element averages, so the arithmetic mean of the nested
/// fine cells is the coarse element average of the fine solution and the
/// discrete integral is preserved.
pub fn restrict_to_coarse(fine_values: &[f64], fine: &Grid, coarse: &Grid) -> Result<Vec<f64>> {
    if fine_values.len() != fine.n_elements() {
        return Err(Error::LengthMismatch {
            expected: fine.n_elements(),
            got: fine_values.len(),
        });
    }
    let ratio = fine.refinement_ratio(coarse)?;
    Ok(fine_values
        .chunks_exact(ratio)
        .map(|chunk| chunk.iter().sum::<f64>() / ratio as f64)
        .collect())
}
