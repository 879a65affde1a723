//! Time integration: adaptive Dormand–Prince 5(4) with dense output for the
//! semi-discrete FEM system, and a fixed-step driver for explicit one-step maps.

use crate::error::{Error, Result};

/// Tolerances and output times for [`integrate_adaptive`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
    pub sample_times: Vec<f64>,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-10,
            initial_step: None,
            max_step: None,
            sample_times: Vec::new(),
        }
    }
}

impl IntegratorSpec {
    pub fn with_samples(sample_times: Vec<f64>) -> Self {
        Self {
            sample_times,
            ..Self::default()
        }
    }

    pub fn validate(&self, t0: f64, t_end: f64) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config(format!(
                "tolerances must be positive, got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        for h in [self.initial_step, self.max_step].into_iter().flatten() {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config(format!("step sizes must be positive, got {h}")));
            }
        }
        check_span(t0, t_end, &self.sample_times)
    }
}

fn check_span(t0: f64, t_end: f64, samples: &[f64]) -> Result<()> {
    if !(t0.is_finite() && t_end.is_finite() && t_end > t0) {
        return Err(Error::Config(format!("need t_end > t0, got [{t0}, {t_end}]")));
    }
    if samples.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("sample times must be strictly increasing".into()));
    }
    if let Some(s) = samples.iter().find(|&&s| !(s >= t0 && s <= t_end)) {
        return Err(Error::Config(format!("sample time {s} outside [{t0}, {t_end}]")));
    }
    Ok(())
}

/// States at the requested sample times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Smallest component seen in any accepted state.
    pub min_value: f64,
}

impl Trajectory {
    fn new() -> Self {
        Self {
            min_value: f64::INFINITY,
            ..Self::default()
        }
    }

    fn observe(&mut self, y: &[f64]) {
        self.min_value = y.iter().fold(self.min_value, |m, &v| m.min(v));
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        self.times.last().map(|&t| (t, self.states.last().unwrap().as_slice()))
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

fn eval<F: FnMut(f64, &[f64], &mut [f64])>(rhs: &mut F, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
    rhs(t, y, out);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteRhs(t));
    }
    Ok(())
}

fn error_ratio(err: &[f64], y0: &[f64], y1: &[f64], spec: &IntegratorSpec) -> f64 {
    err.iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| e.abs() / spec.abs_tol.max(spec.rel_tol * a.abs().max(b.abs())))
        .fold(0.0, f64::max)
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` with an embedded
/// Dormand–Prince 5(4) pair and returns the interpolated states at
/// `spec.sample_times`.
///
/// A step is accepted when every component of the local error estimate is at
/// most `max(abs_tol, rel_tol·|y|)`.
pub fn integrate_adaptive<F>(mut rhs: F, y0: &[f64], t0: f64, t_end: f64, spec: &IntegratorSpec) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    spec.validate(t0, t_end)?;
    let n = y0.len();
    let mut traj = Trajectory::new();
    traj.observe(y0);
    let mut samples = spec.sample_times.iter().copied().peekable();
    while let Some(&s) = samples.peek() {
        if s > t0 {
            break;
        }
        traj.times.push(s);
        traj.states.push(y0.to_vec());
        samples.next();
    }
    if samples.peek().is_none() {
        return Ok(traj);
    }

    let mut st = Stages {
        k: std::array::from_fn(|_| vec![0.0; n]),
        tmp: vec![0.0; n],
    };
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut rcont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    let span = t_end - t0;
    let h_max = spec.max_step.unwrap_or(span).min(span);

    let mut t = t0;
    eval(&mut rhs, t, &y, &mut st.k[0])?;
    let mut h = match spec.initial_step {
        Some(h) => h,
        None => initial_step(&mut rhs, t, &y, &st.k[0], spec, &mut st.tmp, &mut y_new)?,
    }
    .min(h_max);
    let mut last_rejected = false;

    loop {
        let finishing = t + h >= t_end || (t_end - (t + h)) < 1e-12 * span;
        if finishing {
            h = t_end - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(span) {
            return Err(Error::StepSizeUnderflow {
                t,
                step: h,
                last_state: y,
            });
        }
        dp_step(&mut rhs, t, h, &y, &mut st, &mut y_new, &mut err)?;
        let ratio = error_ratio(&err, &y, &y_new, spec);
        if ratio <= 1.0 {
            let t_new = if finishing { t_end } else { t + h };
            let (k1, k7) = (&st.k[0], &st.k[6]);
            for i in 0..n {
                let dy = y_new[i] - y[i];
                let bspl = h * k1[i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * st.k[2][i] + D4 * st.k[3][i] + D5 * st.k[4][i] + D6 * st.k[5][i] + D7 * k7[i]);
            }
            while let Some(&s) = samples.peek() {
                if s > t_new {
                    break;
                }
                let state = if s == t_new {
                    y_new.clone()
                } else {
                    let theta = (s - t) / h;
                    let th1 = 1.0 - theta;
                    (0..n)
                        .map(|i| {
                            rcont[0][i]
                                + theta
                                    * (rcont[1][i] + th1 * (rcont[2][i] + theta * (rcont[3][i] + th1 * rcont[4][i])))
                        })
                        .collect()
                };
                traj.times.push(s);
                traj.states.push(state);
                samples.next();
            }
            std::mem::swap(&mut y, &mut y_new);
            st.k.swap(0, 6);
            t = t_new;
            traj.accepted_steps += 1;
            traj.observe(&y);
            if finishing || samples.peek().is_none() {
                return Ok(traj);
            }
            let mut factor = (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h = (h * factor).min(h_max);
            last_rejected = false;
        } else {
            traj.rejected_steps += 1;
            h *= (0.9 * ratio.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
}

fn dp_step<F: FnMut(f64, &[f64], &mut [f64])>(
    rhs: &mut F,
    t: f64,
    h: f64,
    y: &[f64],
    st: &mut Stages,
    y_new: &mut [f64],
    err: &mut [f64],
) -> Result<()> {
    let n = y.len();
    let Stages { k, tmp } = st;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    for i in 0..n {
        tmp[i] = y[i] + h * A21 * k1[i];
    }
    eval(rhs, t + C2 * h, tmp, k2)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    eval(rhs, t + C3 * h, tmp, k3)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    eval(rhs, t + C4 * h, tmp, k4)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    eval(rhs, t + C5 * h, tmp, k5)?;
    for i in 0..n {
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    eval(rhs, t + h, tmp, k6)?;
    for i in 0..n {
        y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    eval(rhs, t + h, y_new, k7)?;
    for i in 0..n {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(())
}

/// Starting step from the size of `y` and its first two derivatives.
fn initial_step<F: FnMut(f64, &[f64], &mut [f64])>(
    rhs: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    spec: &IntegratorSpec,
    y1: &mut [f64],
    f1: &mut [f64],
) -> Result<f64> {
    let scale: Vec<f64> = y.iter().map(|v| spec.abs_tol + spec.rel_tol * v.abs()).collect();
    let rms = |v: &[f64]| -> f64 {
        (v.iter().zip(&scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len().max(1) as f64).sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    for i in 0..y.len() {
        y1[i] = y[i] + h0 * f0[i];
    }
    eval(rhs, t + h0, y1, f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

/// Applies `step(y, t, dt)` repeatedly from `t0` to `t_end`.
///
/// The number of steps is `⌈(t_end − t0)/dt⌉`, treating ratios within `1e-9`
/// of an integer as exact; a non-dividing `dt` makes the last step shorter.
/// Each sample time is snapped to the nearest step boundary.
pub fn integrate_fixed<S>(
    mut step: S,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    dt: f64,
    sample_times: &[f64],
) -> Result<Trajectory>
where
    S: FnMut(&mut [f64], f64, f64) -> Result<()>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    check_span(t0, t_end, sample_times)?;
    let ratio = (t_end - t0) / dt;
    let n_steps = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let time_at = |k: usize| if k == n_steps { t_end } else { t0 + k as f64 * dt };
    let snapped: Vec<usize> = sample_times
        .iter()
        .map(|&s| if s == t_end { n_steps } else { (((s - t0) / dt).round() as usize).min(n_steps) })
        .collect();

    let mut traj = Trajectory::new();
    let mut y = y0.to_vec();
    traj.observe(&y);
    let mut next = 0;
    let record = |k: usize, y: &[f64], traj: &mut Trajectory, next: &mut usize| {
        while *next < snapped.len() && snapped[*next] == k {
            traj.times.push(time_at(k));
            traj.states.push(y.to_vec());
            *next += 1;
        }
    };
    record(0, &y, &mut traj, &mut next);
    for k in 0..n_steps {
        let t = time_at(k);
        step(&mut y, t, time_at(k + 1) - t)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteRhs(t));
        }
        traj.accepted_steps += 1;
        traj.observe(&y);
        record(k + 1, &y, &mut traj, &mut next);
    }
    Ok(traj)
}
