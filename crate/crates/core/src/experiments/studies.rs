//! The five studies. Independent cases run on the rayon pool; rows are always
//! emitted in configuration order.

use std::sync::Arc;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Initial, Study};
use super::table::{Cell, ResultTable};
use crate::analytic::AnalyticSolution;
use crate::diagnostics::{
    counted_rhs, estimate_order, grid_error_norm, partial_moment, MomentOrder, NoTally, OpCount, Scheme,
};
use crate::error::{Error, Result};
use crate::fem::FemOperator;
use crate::flfm::FlfmOperator;
use crate::kernel::Kernel;
use crate::mesh::{restrict_to_coarse, Grid};
use crate::specfun::QuadratureSpec;
use crate::timestep::{integrate_adaptive, integrate_fixed, IntegratorSpec, Trajectory};

/// Tables produced by one study, plus any cases that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub tables: Vec<ResultTable>,
    pub failures: Vec<CaseFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseFailure {
    pub scheme: Scheme,
    pub x_max: f64,
    pub n: usize,
    pub message: String,
}

impl StudyReport {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes every table as `<dir>/<name>.csv`.
    pub fn write_all(&self, dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
        self.tables.iter().map(|t| t.write_csv(dir)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Case {
    scheme: Scheme,
    x_max: f64,
    n: usize,
}

struct CaseRun {
    grid: Arc<Grid>,
    traj: Trajectory,
}

fn analytic_for(kernel: &Kernel) -> Result<AnalyticSolution> {
    match kernel {
        Kernel::Constant => Ok(AnalyticSolution::Constant),
        Kernel::Multiplicative => Ok(AnalyticSolution::Multiplicative),
        Kernel::Custom(_) => Err(Error::Config("no analytic solution for a custom kernel".into())),
    }
}

fn quad_spec(cfg: &ExperimentConfig) -> Result<QuadratureSpec> {
    QuadratureSpec::new(cfg.quad_tolerances.0, cfg.quad_tolerances.1, 10_000)
}

/// Exact element averages of the scheme's state variable at time `t`.
fn reference_state(cfg: &ExperimentConfig, scheme: Scheme, grid: &Grid, t: f64) -> Result<Vec<f64>> {
    let sol = analytic_for(&cfg.kernel)?;
    let quad = quad_spec(cfg)?;
    match scheme {
        Scheme::Fem => sol.element_averages_f(grid, t, &quad),
        Scheme::Flfm => sol.element_averages_g(grid, t, &quad),
    }
}

fn run_case(cfg: &ExperimentConfig, case: Case, samples: &[f64]) -> Result<CaseRun> {
    let grid = Arc::new(Grid::uniform(cfg.x_min, case.x_max, case.n)?);
    let (t0, t_end) = cfg.t_span;
    let y0 = match cfg.initial {
        Initial::Analytic => reference_state(cfg, case.scheme, &grid, t0)?,
        Initial::Zero => vec![0.0; grid.n_elements()],
    };
    let traj = match case.scheme {
        Scheme::Fem => {
            let op = FemOperator::new((*grid).clone(), cfg.kernel.clone())?;
            let spec = IntegratorSpec {
                rel_tol: cfg.tolerances.0,
                abs_tol: cfg.tolerances.1,
                sample_times: samples.to_vec(),
                ..Default::default()
            };
            integrate_adaptive(|_, y, dy| op.rhs_into(y, dy, &mut NoTally), &y0, t0, t_end, &spec)?
        }
        Scheme::Flfm => {
            let op = FlfmOperator::new((*grid).clone(), cfg.kernel.clone())?;
            let mut flux = vec![0.0; grid.n_boundaries()];
            integrate_fixed(|y, _, dt| op.step_in_place(y, dt, &mut flux), &y0, t0, t_end, cfg.dt, samples)?
        }
    };
    Ok(CaseRun { grid, traj })
}

fn run_cases(cfg: &ExperimentConfig, cases: &[Case], samples: &[f64]) -> Vec<Result<CaseRun>> {
    cases.par_iter().map(|&c| run_case(cfg, c, samples)).collect()
}

fn cases_for(cfg: &ExperimentConfig) -> Vec<Case> {
    let mut cases = Vec::new();
    for scheme in cfg.scheme.schemes() {
        for &x_max in &cfg.x_max {
            for &n in &cfg.n_list {
                cases.push(Case { scheme, x_max, n });
            }
        }
    }
    cases
}

fn new_table(cfg: &ExperimentConfig, name: &str, columns: &[&str]) -> ResultTable {
    let mut t = ResultTable::new(name, columns);
    t.metadata.push(("coagkit_version".into(), env!("CARGO_PKG_VERSION").into()));
    t.metadata.extend(cfg.resolved());
    t
}

/// Splits case results into successes and a failure list.
fn partition(cases: &[Case], results: Vec<Result<CaseRun>>) -> (Vec<Option<CaseRun>>, Vec<CaseFailure>) {
    let mut ok = Vec::with_capacity(cases.len());
    let mut failures = Vec::new();
    for (case, r) in cases.iter().zip(results) {
        match r {
            Ok(run) => ok.push(Some(run)),
            Err(e) => {
                failures.push(CaseFailure {
                    scheme: case.scheme,
                    x_max: case.x_max,
                    n: case.n,
                    message: e.to_string(),
                });
                ok.push(None);
            }
        }
    }
    (ok, failures)
}

fn finish(cfg: &ExperimentConfig, mut tables: Vec<ResultTable>, failures: Vec<CaseFailure>) -> StudyReport {
    if !failures.is_empty() {
        let mut t = new_table(cfg, &format!("{}_failures", cfg.study), &["scheme", "x_max", "n", "error"]);
        for f in &failures {
            t.push(vec![f.scheme.name().into(), f.x_max.into(), f.n.into(), f.message.clone().into()]);
        }
        tables.push(t);
    }
    StudyReport { tables, failures }
}

fn check_study(cfg: &ExperimentConfig, study: Study) -> Result<()> {
    if cfg.study != study {
        return Err(Error::Config(format!("config is for study {}, not {study}", cfg.study)));
    }
    Ok(())
}

/// Error against the analytic solution over time for each `N`, and the order
/// fitted to the final-time errors.
pub fn run_validation(cfg: &ExperimentConfig) -> Result<StudyReport> {
    check_study(cfg, Study::Validate)?;
    let cases = cases_for(cfg);
    let (runs, failures) = partition(&cases, run_cases(cfg, &cases, &cfg.sample_times));
    let kernel = cfg.kernel.name();

    let errors: Vec<Result<Vec<f64>>> = cases
        .par_iter()
        .zip(&runs)
        .map(|(case, run)| match run {
            None => Ok(Vec::new()),
            Some(run) => run
                .traj
                .times
                .iter()
                .zip(&run.traj.states)
                .map(|(&t, state)| {
                    let reference = reference_state(cfg, case.scheme, &run.grid, t)?;
                    grid_error_norm(state, &reference, run.grid.dx())
                })
                .collect(),
        })
        .collect();

    let mut table = new_table(cfg, "validate", &["scheme", "kernel", "n", "dx", "t", "error_l1"]);
    let mut orders = new_table(cfg, "validate_orders", &["scheme", "kernel", "n_min", "n_max", "order"]);
    let mut positivity = new_table(cfg, "validate_min_value", &["scheme", "kernel", "n", "min_value"]);
    for scheme in cfg.scheme.schemes() {
        let mut pairs = Vec::new();
        let mut ns = Vec::new();
        for ((case, run), errs) in cases.iter().zip(&runs).zip(&errors) {
            let (Some(run), Ok(errs)) = (run, errs) else { continue };
            if case.scheme != scheme {
                continue;
            }
            for (&t, &e) in run.traj.times.iter().zip(errs) {
                table.push(vec![scheme.name().into(), kernel.into(), case.n.into(), run.grid.dx().into(), t.into(), e.into()]);
            }
            positivity.push(vec![scheme.name().into(), kernel.into(), case.n.into(), run.traj.min_value.into()]);
            if let Some(&e) = errs.last() {
                pairs.push((run.grid.dx(), e));
                ns.push(case.n);
            }
        }
        if let Ok(order) = estimate_order(&pairs) {
            orders.push(vec![scheme.name().into(), kernel.into(), ns[0].into(), ns[ns.len() - 1].into(), order.into()]);
        }
    }
    let mut failures = failures;
    for ((case, run), errs) in cases.iter().zip(&runs).zip(errors) {
        if let (Some(_), Err(e)) = (run, errs) {
            failures.push(CaseFailure {
                scheme: case.scheme,
                x_max: case.x_max,
                n: case.n,
                message: e.to_string(),
            });
        }
    }
    Ok(finish(cfg, vec![table, orders, positivity], failures))
}

/// Error of each coarse run against the finest run of `n_list`, restricted to
/// the coarse elements, at the end of `t_span`.
pub fn run_self_convergence(cfg: &ExperimentConfig) -> Result<StudyReport> {
    check_study(cfg, Study::SelfConverge)?;
    let cases = cases_for(cfg);
    let (runs, failures) = partition(&cases, run_cases(cfg, &cases, &[cfg.t_span.1]));
    let kernel = cfg.kernel.name();
    let mut table = new_table(cfg, "self_converge", &["scheme", "kernel", "n", "dx", "error_star"]);
    let mut orders = new_table(cfg, "self_converge_orders", &["scheme", "kernel", "n_coarse", "n_next", "order"]);
    for scheme in cfg.scheme.schemes() {
        let mine: Vec<(&Case, &CaseRun)> = cases
            .iter()
            .zip(&runs)
            .filter(|(c, _)| c.scheme == scheme)
            .filter_map(|(c, r)| r.as_ref().map(|r| (c, r)))
            .collect();
        let Some(&(fine_case, fine)) = mine.last() else { continue };
        if fine_case.n != *cfg.n_list.last().unwrap() {
            continue;
        }
        let (_, fine_state) = fine.traj.last().expect("one sample");
        let mut pairs = Vec::new();
        for &(case, run) in &mine {
            let (_, state) = run.traj.last().expect("one sample");
            let restricted = restrict_to_coarse(fine_state, &fine.grid, &run.grid)?;
            let e = grid_error_norm(state, &restricted, run.grid.dx())?;
            table.push(vec![scheme.name().into(), kernel.into(), case.n.into(), run.grid.dx().into(), e.into()]);
            if case.n != fine_case.n {
                pairs.push((case.n, run.grid.dx(), e));
            }
        }
        for w in pairs.windows(2) {
            if let Ok(order) = estimate_order(&[(w[0].1, w[0].2), (w[1].1, w[1].2)]) {
                orders.push(vec![scheme.name().into(), kernel.into(), w[0].0.into(), w[1].0.into(), order.into()]);
            }
        }
    }
    Ok(finish(cfg, vec![table, orders], failures))
}

/// Moments over time, the initial-time comparison with the exact moments of
/// the initial data, and moment differences against the finest run.
pub fn run_moment_study(cfg: &ExperimentConfig) -> Result<StudyReport> {
    check_study(cfg, Study::Moments)?;
    let cases = cases_for(cfg);
    let (runs, failures) = partition(&cases, run_cases(cfg, &cases, &cfg.sample_times));
    let kernel = cfg.kernel.name();
    let x_max = cfg.single_x_max();
    let sol = analytic_for(&cfg.kernel)?;
    let quad = quad_spec(cfg)?;
    let t0 = cfg.t_span.0;

    let moments_of = |scheme: Scheme, grid: &Grid, state: &[f64]| -> Result<(f64, f64)> {
        Ok((
            partial_moment(MomentOrder::Zeroth, scheme, state, grid)?,
            partial_moment(MomentOrder::First, scheme, state, grid)?,
        ))
    };

    let mut series = new_table(cfg, "moments", &["scheme", "kernel", "n", "t", "m0", "m1"]);
    let mut initial = new_table(cfg, "moments_t0", &["source", "kernel", "n", "m0", "m1"]);

    let analytic: Vec<Result<Vec<(f64, f64)>>> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let grid = Grid::uniform(cfg.x_min, x_max, n)?;
            cfg.sample_times.iter().map(|&t| sol.moments(&grid, t, &quad)).collect()
        })
        .collect();
    for (&n, values) in cfg.n_list.iter().zip(&analytic) {
        let Ok(values) = values else { continue };
        for (&t, &(m0, m1)) in cfg.sample_times.iter().zip(values) {
            series.push(vec!["analytic".into(), kernel.into(), n.into(), t.into(), m0.into(), m1.into()]);
        }
        let grid = Grid::uniform(cfg.x_min, x_max, n)?;
        let (m0, m1) = match cfg.initial {
            Initial::Analytic => sol.moments(&grid, t0, &quad)?,
            Initial::Zero => (0.0, 0.0),
        };
        initial.push(vec!["analytic".into(), kernel.into(), n.into(), m0.into(), m1.into()]);
    }

    let mut diffs = new_table(cfg, "moments_diff", &["scheme", "kernel", "n", "dx", "m0_diff", "m1_diff"]);
    let mut orders = new_table(
        cfg,
        "moments_orders",
        &["scheme", "kernel", "n_coarse", "n_next", "m0_order", "m1_order"],
    );
    for scheme in cfg.scheme.schemes() {
        let mut finals = Vec::new();
        for (case, run) in cases.iter().zip(&runs) {
            let Some(run) = run else { continue };
            if case.scheme != scheme {
                continue;
            }
            let mut last = None;
            for (idx, (&t, state)) in run.traj.times.iter().zip(&run.traj.states).enumerate() {
                let (m0, m1) = moments_of(scheme, &run.grid, state)?;
                series.push(vec![scheme.name().into(), kernel.into(), case.n.into(), t.into(), m0.into(), m1.into()]);
                if idx == 0 && t == t0 {
                    initial.push(vec![scheme.name().into(), kernel.into(), case.n.into(), m0.into(), m1.into()]);
                }
                last = Some((m0, m1));
            }
            if let Some(m) = last {
                finals.push((case.n, run.grid.dx(), m));
            }
        }
        let Some(&(n_fine, _, (f0, f1))) = finals.last() else { continue };
        if n_fine != *cfg.n_list.last().unwrap() {
            continue;
        }
        let coarse: Vec<(usize, f64, f64, f64)> = finals[..finals.len() - 1]
            .iter()
            .map(|&(n, dx, (m0, m1))| (n, dx, (m0 - f0).abs(), (m1 - f1).abs()))
            .collect();
        for &(n, dx, d0, d1) in &coarse {
            diffs.push(vec![scheme.name().into(), kernel.into(), n.into(), dx.into(), d0.into(), d1.into()]);
        }
        for w in coarse.windows(2) {
            let o0 = estimate_order(&[(w[0].1, w[0].2), (w[1].1, w[1].2)]).map_or(f64::NAN, |v| v);
            let o1 = estimate_order(&[(w[0].1, w[0].3), (w[1].1, w[1].3)]).map_or(f64::NAN, |v| v);
            orders.push(vec![scheme.name().into(), kernel.into(), w[0].0.into(), w[1].0.into(), o0.into(), o1.into()]);
        }
    }
    Ok(finish(cfg, vec![series, initial, diffs, orders], failures))
}

/// Operation counts of one right-hand-side evaluation per scheme and `N`.
pub fn run_cost_study(cfg: &ExperimentConfig) -> Result<StudyReport> {
    check_study(cfg, Study::Cost)?;
    let cases = cases_for(cfg);
    let kernel = cfg.kernel.name();
    let counts: Vec<Result<OpCount>> = cases
        .par_iter()
        .map(|case| {
            let grid = Grid::uniform(cfg.x_min, case.x_max, case.n)?;
            let state = match cfg.initial {
                Initial::Analytic => reference_state(cfg, case.scheme, &grid, cfg.t_span.0)?,
                Initial::Zero => vec![0.0; grid.n_elements()],
            };
            counted_rhs(case.scheme, &state, &grid, &cfg.kernel).map(|(_, c)| c)
        })
        .collect();
    let mut table = new_table(cfg, "cost", &["scheme", "kernel", "n", "adds", "muls", "divs", "special", "total"]);
    let mut ratios = new_table(cfg, "cost_ratios", &["scheme", "kernel", "n_coarse", "n_next", "ratio"]);
    let mut failures = Vec::new();
    let mut totals: Vec<(Scheme, usize, u64)> = Vec::new();
    for (case, count) in cases.iter().zip(counts) {
        match count {
            Ok(c) => {
                table.push(vec![
                    case.scheme.name().into(),
                    kernel.into(),
                    case.n.into(),
                    c.adds.into(),
                    c.muls.into(),
                    c.divs.into(),
                    c.special.into(),
                    c.total().into(),
                ]);
                totals.push((case.scheme, case.n, c.total()));
            }
            Err(e) => failures.push(CaseFailure {
                scheme: case.scheme,
                x_max: case.x_max,
                n: case.n,
                message: e.to_string(),
            }),
        }
    }
    for scheme in cfg.scheme.schemes() {
        let mine: Vec<_> = totals.iter().filter(|t| t.0 == scheme).collect();
        for w in mine.windows(2) {
            ratios.push(vec![
                scheme.name().into(),
                kernel.into(),
                w[0].1.into(),
                w[1].1.into(),
                (w[1].2 as f64 / w[0].2 as f64).into(),
            ]);
        }
    }
    let mut tables = vec![table, ratios];
    if cfg.scheme.schemes().len() == 2 {
        let mut cross = new_table(cfg, "cost_flfm_over_fem", &["kernel", "n", "ratio"]);
        for &(_, n, fem) in totals.iter().filter(|t| t.0 == Scheme::Fem) {
            if let Some(&(_, _, flfm)) = totals.iter().find(|t| t.0 == Scheme::Flfm && t.1 == n) {
                cross.push(vec![kernel.into(), n.into(), (flfm as f64 / fem as f64).into()]);
            }
        }
        tables.push(cross);
    }
    Ok(finish(cfg, tables, failures))
}

/// Final-time error against the analytic solution for every `(x_max, N)`.
pub fn run_xmax_sweep(cfg: &ExperimentConfig) -> Result<StudyReport> {
    check_study(cfg, Study::XmaxSweep)?;
    let cases = cases_for(cfg);
    let t_end = cfg.t_span.1;
    let (runs, mut failures) = partition(&cases, run_cases(cfg, &cases, &[t_end]));
    let kernel = cfg.kernel.name();
    let errors: Vec<Option<Result<f64>>> = cases
        .par_iter()
        .zip(&runs)
        .map(|(case, run)| {
            run.as_ref().map(|run| {
                let (_, state) = run.traj.last().expect("one sample");
                let reference = reference_state(cfg, case.scheme, &run.grid, t_end)?;
                grid_error_norm(state, &reference, run.grid.dx())
            })
        })
        .collect();
    let mut table = new_table(cfg, "xmax_sweep", &["scheme", "kernel", "x_max", "n", "dx", "error_l1"]);
    for ((case, run), err) in cases.iter().zip(&runs).zip(errors) {
        let (Some(run), Some(err)) = (run, err) else { continue };
        match err {
            Ok(e) => table.push(vec![
                case.scheme.name().into(),
                kernel.into(),
                case.x_max.into(),
                case.n.into(),
                run.grid.dx().into(),
                Cell::Float(e),
            ]),
            Err(e) => failures.push(CaseFailure {
                scheme: case.scheme,
                x_max: case.x_max,
                n: case.n,
                message: e.to_string(),
            }),
        }
    }
    Ok(finish(cfg, vec![table], failures))
}

/// Dispatches on `cfg.study`.
pub fn run_study(cfg: &ExperimentConfig) -> Result<StudyReport> {
    match cfg.study {
        Study::Validate => run_validation(cfg),
        Study::SelfConverge => run_self_convergence(cfg),
        Study::Moments => run_moment_study(cfg),
        Study::Cost => run_cost_study(cfg),
        Study::XmaxSweep => run_xmax_sweep(cfg),
    }
}
