//! Reproducible studies driven by flat `key = value` configuration files.
//!
//! Each study returns a [`StudyReport`] of [`ResultTable`]s; every table carries
//! the fully resolved configuration as `#` comment lines ahead of the CSV
//! header.

mod config;
mod studies;
mod table;

pub use config::{ExperimentConfig, Initial, SchemeChoice, Study};
pub use studies::{
    run_cost_study, run_moment_study, run_self_convergence, run_study, run_validation, run_xmax_sweep,
    CaseFailure, StudyReport,
};
pub use table::{Cell, ResultTable};
