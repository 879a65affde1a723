//! Solvers for the Smoluchowski coagulation equation on a truncated volume domain.
//!
//! Two discretizations share one uniform grid:
//!
//! * [`fem`]: piecewise-constant discontinuous Galerkin projection. The state is
//!   the element-averaged number density `f_i`.
//! * [`flfm`]: a finite-volume mass flux scheme. The state is the
//!   element-averaged volume density `g_i = x f_i`, driven by the mass flux across
//!   element boundaries.
//!
//! [`analytic`] holds the closed-form reference solutions for the constant and
//! multiplicative kernels, [`diagnostics`] the moments, error norms, order fits and
//! operation counting, and [`experiments`] the reproducible studies behind the
//! `coagkit` command line tool.

pub mod analytic;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod flfm;
pub mod kernel;
pub mod mesh;
pub mod specfun;
pub mod timestep;

pub use error::{Error, Result};
pub use kernel::Kernel;
pub use mesh::Grid;
