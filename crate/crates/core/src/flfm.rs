//! Finite-volume flux scheme.
//!
//! The state is the element average `g_i` of the volume density `x f(x)`.
//! Coagulation moves volume upward through element boundaries; `J_i` is the
//! volume flux across boundary `i`, truncated at `x_max` so mass leaves
//! through the last boundary. The update is
//!
//! ```text
//! g_i ← g_i − (dt/Δx) (J_{i+1} − J_i)
//! ```

use std::sync::Arc;

use crate::diagnostics::OpTally;
use crate::error::{Error, Result};
use crate::fem::check_state;
use crate::kernel::Kernel;
use crate::mesh::Grid;
use crate::specfun::{adaptive_integrate, QuadratureSpec};

/// Element averages of the volume density on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeDistribution {
    values: Vec<f64>,
    grid: Arc<Grid>,
}

impl VolumeDistribution {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        check_state(&values, &grid)?;
        Ok(Self { values, grid })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Boundary fluxes `J_0..J_n` for `n` elements. `J_0` is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxVector {
    pub values: Vec<f64>,
}

impl FluxVector {
    /// Flux through `x_max`, i.e. the rate at which volume leaves the domain.
    pub fn outflow(&self) -> f64 {
        *self.values.last().expect("flux vector is never empty")
    }
}

/// Element averages `(1/Δx) ∫ x f0(x) dx` over every element.
pub fn init_volume_distribution(
    f0: impl Fn(f64) -> f64,
    grid: Arc<Grid>,
    quad: &QuadratureSpec,
) -> Result<VolumeDistribution> {
    let dx = grid.dx();
    let values = (0..grid.n_elements())
        .map(|e| {
            let (a, b) = grid.element(e);
            adaptive_integrate(|x| x * f0(x), a, b, quad).map(|v| v / dx)
        })
        .collect::<Result<Vec<_>>>()?;
    VolumeDistribution::new(grid, values)
}

fn check_log_domain(grid: &Grid, kernel: &Kernel) -> Result<()> {
    if matches!(kernel, Kernel::Constant) && !(grid.x_min() > 0.0) {
        return Err(Error::LogSingularity(format!(
            "constant-kernel flux needs x_min > 0, got {}",
            grid.x_min()
        )));
    }
    Ok(())
}

/// Inner integrals `∫ K(x_mid(p), y) / y dy`.
#[derive(Debug, Clone)]
enum Weights {
    /// The inner integrals do not depend on `p` once `g_p` is scaled by `u_p`.
    /// `partial[k]` covers `[x_mid(k), x_{k+1}]`, `full[j]` covers element `j`.
    Separable {
        scale: Option<Vec<f64>>,
        partial: Vec<f64>,
        full: Vec<f64>,
    },
    /// Row-major `n × n` tables indexed `[p][k]`.
    Tables { partial: Vec<f64>, full: Vec<f64> },
}

/// Precomputed flux assembly for one grid and kernel. Each flux evaluation
/// costs `O(n²)`.
#[derive(Debug, Clone)]
pub struct FlfmOperator {
    grid: Grid,
    kernel: Kernel,
    weights: Weights,
}

impl FlfmOperator {
    pub fn new(grid: Grid, kernel: Kernel) -> Result<Self> {
        Self::build(grid, kernel, None)
    }

    /// Inner integrals by adaptive quadrature regardless of kernel.
    pub fn with_quadrature(grid: Grid, kernel: Kernel, quad: &QuadratureSpec) -> Result<Self> {
        Self::build(grid, kernel, Some(quad))
    }

    fn build(grid: Grid, kernel: Kernel, quad: Option<&QuadratureSpec>) -> Result<Self> {
        check_log_domain(&grid, &kernel)?;
        let x = grid.boundaries();
        let xm = grid.midpoints();
        let n = grid.n_elements();
        let weights = match (&kernel, quad) {
            (Kernel::Constant, None) => Weights::Separable {
                scale: None,
                partial: (0..n).map(|k| (x[k + 1] / xm[k]).ln()).collect(),
                full: (0..n).map(|j| (x[j + 1] / x[j]).ln()).collect(),
            },
            (Kernel::Multiplicative, None) => Weights::Separable {
                scale: Some(xm.clone()),
                partial: (0..n).map(|k| x[k + 1] - xm[k]).collect(),
                full: (0..n).map(|j| x[j + 1] - x[j]).collect(),
            },
            (_, quad) => {
                let default = QuadratureSpec::default();
                let quad = quad.unwrap_or(&default);
                quad.validate()?;
                let inner = |p: usize, a: f64, b: f64| {
                    let v = xm[p];
                    adaptive_integrate(|y| kernel.rate(v, y) / y, a, b, quad)
                };
                let mut partial = Vec::with_capacity(n * n);
                let mut full = Vec::with_capacity(n * n);
                for p in 0..n {
                    for k in 0..n {
                        partial.push(inner(p, xm[k], x[k + 1])?);
                        full.push(inner(p, x[k], x[k + 1])?);
                    }
                }
                Weights::Tables { partial, full }
            }
        };
        Ok(Self {
            grid,
            kernel,
            weights,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Fills `flux` (length `n + 1`) from the state `g` (length `n`).
    pub fn flux_into(&self, g: &[f64], flux: &mut [f64]) {
        let n = g.len();
        debug_assert!(n == self.grid.n_elements() && flux.len() == n + 1);
        let dx = self.grid.dx();
        flux[0] = 0.0;
        match &self.weights {
            Weights::Separable {
                scale,
                partial,
                full,
            } => {
                // h[k] = partial[k] g[k] + Σ_{j>k} full[j] g[j]
                let mut h = vec![0.0; n];
                let mut tail = 0.0;
                for k in (0..n).rev() {
                    h[k] = partial[k] * g[k] + tail;
                    tail += full[k] * g[k];
                }
                let u: Vec<f64> = match scale {
                    Some(s) => g.iter().zip(s).map(|(a, b)| a * b).collect(),
                    None => g.to_vec(),
                };
                for b in 1..=n {
                    let mut acc = 0.0;
                    for p in 0..b {
                        acc += u[p] * h[b - 1 - p];
                    }
                    flux[b] = dx * acc;
                }
            }
            Weights::Tables { partial, full } => {
                let mut h = vec![0.0; n * n];
                for p in 0..n {
                    let (pr, fr) = (&partial[p * n..(p + 1) * n], &full[p * n..(p + 1) * n]);
                    let hr = &mut h[p * n..(p + 1) * n];
                    let mut tail = 0.0;
                    for k in (0..n).rev() {
                        hr[k] = pr[k] * g[k] + tail;
                        tail += fr[k] * g[k];
                    }
                }
                for b in 1..=n {
                    let mut acc = 0.0;
                    for p in 0..b {
                        acc += g[p] * h[p * n + b - 1 - p];
                    }
                    flux[b] = dx * acc;
                }
            }
        }
    }

    pub fn flux(&self, g: &[f64]) -> Result<FluxVector> {
        check_state(g, &self.grid)?;
        let mut values = vec![0.0; g.len() + 1];
        self.flux_into(g, &mut values);
        Ok(FluxVector { values })
    }

    /// Semi-discrete rate `dg_i/dt = −(J_{i+1} − J_i)/Δx`, using `flux` as scratch.
    pub fn rhs_into(&self, g: &[f64], rates: &mut [f64], flux: &mut [f64]) {
        self.flux_into(g, flux);
        let dx = self.grid.dx();
        for (e, r) in rates.iter_mut().enumerate() {
            *r = -(flux[e + 1] - flux[e]) / dx;
        }
    }

    /// One explicit step in place.
    pub fn step_in_place(&self, g: &mut [f64], dt: f64, flux: &mut [f64]) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        self.flux_into(g, flux);
        let ratio = dt / self.grid.dx();
        for (e, v) in g.iter_mut().enumerate() {
            *v -= ratio * (flux[e + 1] - flux[e]);
        }
        Ok(())
    }
}

/// Boundary fluxes for `state`.
pub fn compute_flux(state: &VolumeDistribution, kernel: &Kernel) -> Result<FluxVector> {
    FlfmOperator::new((**state.grid()).clone(), kernel.clone())?.flux(state.values())
}

/// Advances `state` by one explicit step of length `dt`.
pub fn flfm_step(state: VolumeDistribution, kernel: &Kernel, dt: f64) -> Result<VolumeDistribution> {
    let op = FlfmOperator::new((**state.grid()).clone(), kernel.clone())?;
    let grid = state.grid().clone();
    let mut g = state.into_values();
    let mut flux = vec![0.0; g.len() + 1];
    op.step_in_place(&mut g, dt, &mut flux)?;
    VolumeDistribution::new(grid, g)
}

/// Direct evaluation of the flux as a triple sum over boundary, source element
/// and target element, with every inner kernel integral evaluated where it is
/// used. `O(n³)`; kept for operation counting and as a reference for the
/// precomputed path.
pub fn compute_flux_naive<T: OpTally>(g: &[f64], grid: &Grid, kernel: &Kernel, tally: &mut T) -> Result<Vec<f64>> {
    check_state(g, grid)?;
    check_log_domain(grid, kernel)?;
    let n = g.len();
    let x = grid.boundaries();
    let dx = grid.dx();
    let quad = QuadratureSpec::default();
    let mut flux = vec![0.0; n + 1];
    for b in 1..=n {
        let mut jb = 0.0;
        for p in 0..b {
            let k = b - 1 - p;
            let xm_k = 0.5 * (x[k] + x[k + 1]);
            tally.add(1);
            tally.mul(1);
            let xm_p = if matches!(kernel, Kernel::Constant) {
                f64::NAN
            } else {
                tally.add(1);
                tally.mul(1);
                0.5 * (x[p] + x[p + 1])
            };
            let mut inner = match kernel {
                Kernel::Constant => {
                    tally.div(1);
                    tally.special(1);
                    (x[k + 1] / xm_k).ln() * g[k]
                }
                Kernel::Multiplicative => {
                    tally.add(1);
                    tally.mul(1);
                    xm_p * (x[k + 1] - xm_k) * g[k]
                }
                Kernel::Custom(_) => {
                    tally.special(1);
                    adaptive_integrate(|y| kernel.rate(xm_p, y) / y, xm_k, x[k + 1], &quad)? * g[k]
                }
            };
            tally.mul(1);
            for j in k + 1..n {
                let w = match kernel {
                    Kernel::Constant => {
                        tally.div(1);
                        tally.special(1);
                        (x[j + 1] / x[j]).ln()
                    }
                    Kernel::Multiplicative => {
                        tally.add(1);
                        tally.mul(1);
                        xm_p * (x[j + 1] - x[j])
                    }
                    Kernel::Custom(_) => {
                        tally.special(1);
                        adaptive_integrate(|y| kernel.rate(xm_p, y) / y, x[j], x[j + 1], &quad)?
                    }
                };
                inner += w * g[j];
                tally.mul(1);
                tally.add(1);
            }
            jb += dx * g[p] * inner;
            tally.mul(2);
            tally.add(1);
        }
        flux[b] = jb;
    }
    Ok(flux)
}
