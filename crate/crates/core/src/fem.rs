//! Piecewise-constant discontinuous Galerkin discretization.
//!
//! The state is the vector of element averages `f_i` of the number density.
//! Aggregates in element `i` are treated as having volume `x_{i+1}` when they
//! leave, and new aggregates are assigned by index convolution: the product
//! `f_j f_{i-j}` feeds element `i`.

use std::sync::Arc;

use crate::diagnostics::{NoTally, OpTally};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::mesh::Grid;
use crate::specfun::{adaptive_integrate, QuadratureSpec};

/// Element averages of the number density on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeDistribution {
    values: Vec<f64>,
    grid: Arc<Grid>,
}

impl SizeDistribution {
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

pub(crate) fn check_state(values: &[f64], grid: &Grid) -> Result<()> {
    if values.len() != grid.n_elements() {
        return Err(Error::LengthMismatch {
            expected: grid.n_elements(),
            got: values.len(),
        });
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("state contains non-finite value {v}")));
    }
    Ok(())
}

/// Element averages `(1/Δx) ∫ f0` over every element.
pub fn project_initial(
    f0: impl Fn(f64) -> f64,
    grid: Arc<Grid>,
    quad: &QuadratureSpec,
) -> Result<SizeDistribution> {
    let dx = grid.dx();
    let values = (0..grid.n_elements())
        .map(|e| {
            let (a, b) = grid.element(e);
            adaptive_integrate(&f0, a, b, quad).map(|v| v / dx)
        })
        .collect::<Result<Vec<_>>>()?;
    SizeDistribution::new(grid, values)
}

#[derive(Debug, Clone)]
enum Assembly {
    Constant,
    /// `c2_j = (x_{j+1}² − x_j²)/2`, `c3_j = (x_{j+1}³ − x_j³)/3`
    Multiplicative { c2: Vec<f64>, c3: Vec<f64> },
    /// Kernel integrals by quadrature. `out` is row-major `n × n`,
    /// `inn` packs row `e` (length `e`) at offset `e(e−1)/2`.
    Tables { out: Vec<f64>, inn: Vec<f64> },
}

/// Right-hand side of the semi-discrete system `df/dt = in + out` for one
/// grid and kernel.
#[derive(Debug, Clone)]
pub struct FemOperator {
    grid: Grid,
    kernel: Kernel,
    assembly: Assembly,
}

impl FemOperator {
    /// Closed forms for the constant and multiplicative kernels; quadrature
    /// tables with the default [`QuadratureSpec`] for custom kernels.
    pub fn new(grid: Grid, kernel: Kernel) -> Result<Self> {
        Self::build(grid, kernel, &QuadratureSpec::default(), &mut NoTally)
    }

    /// Kernel integrals by adaptive quadrature regardless of kernel.
    pub fn with_quadrature(grid: Grid, kernel: Kernel, quad: &QuadratureSpec) -> Result<Self> {
        let assembly = quadrature_tables(&grid, &kernel, quad, &mut NoTally)?;
        Ok(Self {
            grid,
            kernel,
            assembly,
        })
    }

    pub(crate) fn build<T: OpTally>(grid: Grid, kernel: Kernel, quad: &QuadratureSpec, tally: &mut T) -> Result<Self> {
        let assembly = match kernel {
            Kernel::Constant => Assembly::Constant,
            Kernel::Multiplicative => {
                let x = grid.boundaries();
                let n = grid.n_elements();
                let mut c2 = Vec::with_capacity(n);
                let mut c3 = Vec::with_capacity(n);
                for j in 0..n {
                    let (a, b) = (x[j], x[j + 1]);
                    let (a2, b2) = (a * a, b * b);
                    c2.push((b2 - a2) * 0.5);
                    c3.push((b2 * b - a2 * a) / 3.0);
                }
                tally.mul(5 * n as u64);
                tally.add(2 * n as u64);
                tally.div(n as u64);
                Assembly::Multiplicative { c2, c3 }
            }
            Kernel::Custom(_) => quadrature_tables(&grid, &kernel, quad, tally)?,
        };
        Ok(Self {
            grid,
            kernel,
            assembly,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn n_elements(&self) -> usize {
        self.grid.n_elements()
    }

    /// Writes the loss term into `out`. All entries are `≤ 0` for `f ≥ 0`.
    pub fn aggregation_out_into<T: OpTally>(&self, f: &[f64], out: &mut [f64], tally: &mut T) {
        let n = self.n_elements();
        debug_assert!(f.len() == n && out.len() == n);
        let x = self.grid.boundaries();
        match &self.assembly {
            Assembly::Constant => {
                let total: f64 = f.iter().sum();
                let c = self.grid.dx() * total;
                for (o, fi) in out.iter_mut().zip(f) {
                    *o = -fi * c;
                }
                tally.add(n as u64);
                tally.mul(1 + n as u64);
            }
            Assembly::Multiplicative { c2, .. } => {
                let s: f64 = c2.iter().zip(f).map(|(c, fj)| c * fj).sum();
                for e in 0..n {
                    out[e] = -f[e] * x[e + 1] * s;
                }
                tally.mul(3 * n as u64);
                tally.add(n as u64);
            }
            Assembly::Tables { out: table, .. } => {
                for e in 0..n {
                    let row = &table[e * n..(e + 1) * n];
                    let s: f64 = row.iter().zip(f).map(|(c, fj)| c * fj).sum();
                    out[e] = -f[e] * s;
                }
                tally.mul((n * n + n) as u64);
                tally.add((n * n) as u64);
            }
        }
    }

    /// Gain into element `e`; zero for the first element.
    fn gain<T: OpTally>(&self, f: &[f64], e: usize, tally: &mut T) -> f64 {
        if e == 0 {
            return 0.0;
        }
        let m = e as u64;
        match &self.assembly {
            Assembly::Constant => {
                let mut acc = 0.0;
                for j in 0..e {
                    acc += f[j] * f[e - 1 - j];
                }
                tally.mul(m + 2);
                tally.add(m);
                0.5 * self.grid.dx() * acc
            }
            Assembly::Multiplicative { c2, c3 } => {
                let xi = self.grid.boundaries()[e];
                let mut acc = 0.0;
                for j in 0..e {
                    acc += (xi * c2[j] - c3[j]) * f[j] * f[e - 1 - j];
                }
                tally.mul(3 * m + 1);
                tally.add(2 * m);
                0.5 * acc
            }
            Assembly::Tables { inn, .. } => {
                let row = &inn[e * (e - 1) / 2..e * (e + 1) / 2];
                let mut acc = 0.0;
                for j in 0..e {
                    acc += row[j] * f[j] * f[e - 1 - j];
                }
                tally.mul(2 * m + 1);
                tally.add(m);
                0.5 * acc
            }
        }
    }

    /// Writes the gain term into `out`. All entries are `≥ 0` for `f ≥ 0`.
    pub fn aggregation_in_into<T: OpTally>(&self, f: &[f64], out: &mut [f64], tally: &mut T) {
        debug_assert!(f.len() == self.n_elements() && out.len() == self.n_elements());
        for (e, o) in out.iter_mut().enumerate() {
            *o = self.gain(f, e, tally);
        }
    }

    /// `rates = in + out`, evaluated without temporaries.
    pub fn rhs_into<T: OpTally>(&self, f: &[f64], rates: &mut [f64], tally: &mut T) {
        self.aggregation_out_into(f, rates, tally);
        for e in 1..rates.len() {
            rates[e] += self.gain(f, e, tally);
        }
        tally.add(rates.len() as u64 - 1);
    }

    pub fn rhs(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_state(f, &self.grid)?;
        let mut rates = vec![0.0; f.len()];
        self.rhs_into(f, &mut rates, &mut NoTally);
        Ok(rates)
    }
}

fn quadrature_tables<T: OpTally>(grid: &Grid, kernel: &Kernel, quad: &QuadratureSpec, tally: &mut T) -> Result<Assembly> {
    quad.validate()?;
    let x = grid.boundaries();
    let n = grid.n_elements();
    let mut out = Vec::with_capacity(n * n);
    for e in 0..n {
        let v = x[e + 1];
        for j in 0..n {
            out.push(adaptive_integrate(|y| kernel.rate(v, y), x[j], x[j + 1], quad)?);
        }
    }
    let mut inn = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for e in 1..n {
        let xi = x[e];
        for j in 0..e {
            inn.push(adaptive_integrate(|y| kernel.rate(y, xi - y), x[j], x[j + 1], quad)?);
        }
    }
    tally.special((out.len() + inn.len()) as u64);
    Ok(Assembly::Tables { out, inn })
}

fn with_operator(state: &SizeDistribution, kernel: &Kernel, eval: impl FnOnce(&FemOperator, &[f64], &mut [f64])) -> Result<Vec<f64>> {
    let op = FemOperator::new((**state.grid()).clone(), kernel.clone())?;
    let mut out = vec![0.0; state.values().len()];
    eval(&op, state.values(), &mut out);
    Ok(out)
}

/// Loss term of the rate vector.
pub fn aggregation_out(state: &SizeDistribution, kernel: &Kernel) -> Result<Vec<f64>> {
    with_operator(state, kernel, |op, f, out| op.aggregation_out_into(f, out, &mut NoTally))
}

/// Gain term of the rate vector.
pub fn aggregation_in(state: &SizeDistribution, kernel: &Kernel) -> Result<Vec<f64>> {
    with_operator(state, kernel, |op, f, out| op.aggregation_in_into(f, out, &mut NoTally))
}

/// Full rate vector `df_i/dt`.
pub fn fem_rhs(state: &SizeDistribution, kernel: &Kernel) -> Result<Vec<f64>> {
    with_operator(state, kernel, |op, f, out| op.rhs_into(f, out, &mut NoTally))
}
