//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Validate,
    SelfConverge,
    Moments,
    Cost,
    XmaxSweep,
}

impl Study {
    pub fn name(&self) -> &'static str {
        match self {
            Study::Validate => "validate",
            Study::SelfConverge => "self_converge",
            Study::Moments => "moments",
            Study::Cost => "cost",
            Study::XmaxSweep => "xmax_sweep",
        }
    }
}

impl FromStr for Study {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "validate" => Ok(Study::Validate),
            "self_converge" => Ok(Study::SelfConverge),
            "moments" => Ok(Study::Moments),
            "cost" => Ok(Study::Cost),
            "xmax_sweep" => Ok(Study::XmaxSweep),
            _ => Err(Error::Config(format!("unknown study '{s}'"))),
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Fem,
    Flfm,
    Both,
}

impl SchemeChoice {
    pub fn schemes(&self) -> Vec<crate::diagnostics::Scheme> {
        use crate::diagnostics::Scheme;
        match self {
            SchemeChoice::Fem => vec![Scheme::Fem],
            SchemeChoice::Flfm => vec![Scheme::Flfm],
            SchemeChoice::Both => vec![Scheme::Fem, Scheme::Flfm],
        }
    }

    fn name(&self) -> &'static str {
        match self {
            SchemeChoice::Fem => "fem",
            SchemeChoice::Flfm => "flfm",
            SchemeChoice::Both => "both",
        }
    }
}

impl FromStr for SchemeChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fem" => Ok(SchemeChoice::Fem),
            "flfm" => Ok(SchemeChoice::Flfm),
            "both" => Ok(SchemeChoice::Both),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Initial data: analytic element averages at `t0`, or all zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    Analytic,
    Zero,
}

impl FromStr for Initial {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Initial::Analytic),
            "zero" => Ok(Initial::Zero),
            _ => Err(Error::Config(format!("unknown initial data '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub study: Study,
    pub kernel: Kernel,
    pub scheme: SchemeChoice,
    pub x_min: f64,
    /// One value, or several for the `xmax_sweep` study.
    pub x_max: Vec<f64>,
    /// Boundary counts, ascending.
    pub n_list: Vec<usize>,
    pub t_span: (f64, f64),
    pub sample_times: Vec<f64>,
    /// Fixed step of the flux scheme.
    pub dt: f64,
    /// Integrator `(rel_tol, abs_tol)`.
    pub tolerances: (f64, f64),
    /// Quadrature `(rel_tol, abs_tol)` for analytic element averages.
    pub quad_tolerances: (f64, f64),
    pub initial: Initial,
    pub output_dir: PathBuf,
}

const KEYS: &[&str] = &[
    "study",
    "kernel",
    "scheme",
    "x_min",
    "x_max",
    "n_list",
    "t_span",
    "sample_times",
    "dt",
    "tolerances",
    "quad_tolerances",
    "initial",
    "output_dir",
];

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: '{s}' is not a number")))
}

fn parse_list<T: FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{}'", item.trim())))
        })
        .collect()
}

fn parse_pair(key: &str, s: &str) -> Result<(f64, f64)> {
    match parse_list::<f64>(key, s)?.as_slice() {
        &[a, b] => Ok((a, b)),
        other => Err(Error::Config(format!("{key}: expected two values, got {}", other.len()))),
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines. `#` starts a comment; lists are
    /// comma-separated. Unset optional keys take study and kernel defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(&str, &str)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if entries.iter().any(|(k, _)| *k == key) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            entries.push((key, value));
        }
        let get = |k: &str| entries.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
        let require = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing key '{k}'")));

        let study: Study = require("study")?.parse()?;
        let kernel: Kernel = require("kernel")?.parse()?;
        let scheme = get("scheme").map(str::parse).transpose()?.unwrap_or(SchemeChoice::Both);
        let x_min = match get("x_min") {
            Some(v) => parse_f64("x_min", v)?,
            None => match kernel {
                Kernel::Multiplicative => 0.75,
                _ => 1e-3,
            },
        };
        let x_max = parse_list::<f64>("x_max", require("x_max")?)?;
        let n_list = parse_list::<usize>("n_list", require("n_list")?)?;
        let t_span = match get("t_span") {
            Some(v) => parse_pair("t_span", v)?,
            None => match study {
                Study::Moments => (0.0, 3.0),
                _ => (1.0, 3.0),
            },
        };
        let sample_times = match get("sample_times") {
            Some(v) => parse_list::<f64>("sample_times", v)?,
            None => {
                let (a, b) = t_span;
                (0..=20).map(|k| if k == 20 { b } else { a + (b - a) * k as f64 / 20.0 }).collect()
            }
        };
        let cfg = Self {
            study,
            kernel,
            scheme,
            x_min,
            x_max,
            n_list,
            t_span,
            sample_times,
            dt: get("dt").map(|v| parse_f64("dt", v)).transpose()?.unwrap_or(1e-3),
            tolerances: get("tolerances").map(|v| parse_pair("tolerances", v)).transpose()?.unwrap_or((1e-6, 1e-10)),
            quad_tolerances: get("quad_tolerances")
                .map(|v| parse_pair("quad_tolerances", v))
                .transpose()?
                .unwrap_or((1e-10, 1e-14)),
            initial: get("initial").map(str::parse).transpose()?.unwrap_or(Initial::Analytic),
            output_dir: PathBuf::from(get("output_dir").unwrap_or("results")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !matches!(self.kernel, Kernel::Constant | Kernel::Multiplicative) {
            return bad("only the constant and multiplicative kernels have analytic solutions".into());
        }
        if !(self.x_min >= 0.0 && self.x_min.is_finite()) {
            return bad(format!("x_min must be finite and >= 0, got {}", self.x_min));
        }
        if self.x_max.is_empty() || self.x_max.iter().any(|&x| !(x > self.x_min && x.is_finite())) {
            return bad(format!("every x_max must exceed x_min = {}", self.x_min));
        }
        if self.study != Study::XmaxSweep && self.x_max.len() != 1 {
            return bad(format!("study {} takes a single x_max", self.study));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|&n| n < 3) {
            return bad("n_list entries must be at least 3".into());
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return bad("n_list must be strictly ascending".into());
        }
        let (t0, t1) = self.t_span;
        if !(t0 >= 0.0 && t1 > t0 && t1.is_finite()) {
            return bad(format!("t_span must satisfy 0 <= t0 < t_end, got [{t0}, {t1}]"));
        }
        if self.sample_times.windows(2).any(|w| w[1] <= w[0])
            || self.sample_times.iter().any(|&s| !(s >= t0 && s <= t1))
        {
            return bad("sample_times must be ascending and inside t_span".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        for (name, (r, a)) in [("tolerances", self.tolerances), ("quad_tolerances", self.quad_tolerances)] {
            if !(r > 0.0 && a > 0.0) {
                return bad(format!("{name} must be positive"));
            }
        }
        if matches!(self.kernel, Kernel::Constant) && self.scheme != SchemeChoice::Fem && self.x_min <= 0.0 {
            return bad("the flux scheme with the constant kernel needs x_min > 0".into());
        }
        if self.study == Study::SelfConverge {
            let fine = *self.n_list.last().unwrap() - 1;
            if let Some(n) = self.n_list.iter().find(|&&n| fine % (n - 1) != 0) {
                return bad(format!(
                    "boundary count {n} does not nest into the fine grid of {} boundaries",
                    fine + 1
                ));
            }
        }
        Ok(())
    }

    pub fn single_x_max(&self) -> f64 {
        self.x_max[0]
    }

    /// Every field, defaults included, as `(key, value)` pairs.
    pub fn resolved(&self) -> Vec<(String, String)> {
        vec![
            ("study".into(), self.study.to_string()),
            ("kernel".into(), self.kernel.to_string()),
            ("scheme".into(), self.scheme.name().into()),
            ("x_min".into(), self.x_min.to_string()),
            ("x_max".into(), join(&self.x_max)),
            ("n_list".into(), join(&self.n_list)),
            ("t_span".into(), format!("{}, {}", self.t_span.0, self.t_span.1)),
            ("sample_times".into(), join(&self.sample_times)),
            ("dt".into(), self.dt.to_string()),
            ("tolerances".into(), format!("{}, {}", self.tolerances.0, self.tolerances.1)),
            (
                "quad_tolerances".into(),
                format!("{}, {}", self.quad_tolerances.0, self.quad_tolerances.1),
            ),
            (
                "initial".into(),
                match self.initial {
                    Initial::Analytic => "analytic",
                    Initial::Zero => "zero",
                }
                .into(),
            ),
            ("output_dir".into(), self.output_dir.display().to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "
        # constant kernel validation
        study = validate
        kernel = constant
        x_max = 50
        n_list = 101, 201, 401   # boundary counts
    ";

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::parse(BASIC).unwrap();
        assert_eq!(c.study, Study::Validate);
        assert_eq!(c.scheme, SchemeChoice::Both);
        assert_eq!(c.x_min, 1e-3);
        assert_eq!(c.n_list, vec![101, 201, 401]);
        assert_eq!(c.t_span, (1.0, 3.0));
        assert_eq!(c.sample_times.len(), 21);
        assert_eq!(*c.sample_times.last().unwrap(), 3.0);
        assert_eq!(c.tolerances, (1e-6, 1e-10));
    }

    #[test]
    fn resolved_round_trips() {
        let c = ExperimentConfig::parse(BASIC).unwrap();
        let text: String = c.resolved().iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let d = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(c.resolved(), d.resolved());
    }

    #[test]
    fn multiplicative_defaults_and_moments_span() {
        let c = ExperimentConfig::parse("study = moments\nkernel = multiplicative\nx_max = 700\nn_list = 400").unwrap();
        assert_eq!(c.x_min, 0.75);
        assert_eq!(c.t_span, (0.0, 3.0));
    }

    #[test]
    fn errors() {
        for text in [
            "study = validate\nkernel = constant\nn_list = 10",
            "study = nope\nkernel = constant\nx_max = 1\nn_list = 10",
            "study = validate\nkernel = additive\nx_max = 1\nn_list = 10",
            "study = validate\nkernel = constant\nx_max = 1\nn_list = 20, 10",
            "study = validate\nkernel = constant\nx_max = 1\nn_list = 10\nbogus = 3",
            "study = validate\nkernel = constant\nx_max = 1\nn_list = 10\nkernel = constant",
            "study = validate\nkernel = constant\nx_max = 1, 2\nn_list = 10",
            "study = validate\nkernel = constant\nx_max = 1\nn_list = 10\nx_min = 0",
            "study = validate\nkernel = constant\nx_max = 1\nn_list = 10\nsample_times = 0.5",
            "study = validate\nkernel = constant\nx_max = 1\nn_list = 10\ndt = -1",
            "study = self_converge\nkernel = constant\nx_max = 1\nn_list = 10, 21",
            "study = validate\nkernel = constant\nx_max = 1\nn_list = ten",
            "just some text",
        ] {
            assert!(matches!(ExperimentConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
        let fem_only = "study = validate\nkernel = constant\nscheme = fem\nx_max = 1\nn_list = 10\nx_min = 0";
        assert!(ExperimentConfig::parse(fem_only).is_ok());
        let nested = "study = self-converge\nkernel = constant\nx_max = 1\nn_list = 11, 21, 41";
        assert!(ExperimentConfig::parse(nested).is_ok());
    }
}
