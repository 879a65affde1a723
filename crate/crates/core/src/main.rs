use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use coagkit::experiments::{run_study, ExperimentConfig, Study};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StudyArg {
    Validate,
    SelfConverge,
    Moments,
    Cost,
    XmaxSweep,
}

impl From<StudyArg> for Study {
    fn from(s: StudyArg) -> Self {
        match s {
            StudyArg::Validate => Study::Validate,
            StudyArg::SelfConverge => Study::SelfConverge,
            StudyArg::Moments => Study::Moments,
            StudyArg::Cost => Study::Cost,
            StudyArg::XmaxSweep => Study::XmaxSweep,
        }
    }
}

/// Run a coagulation solver study and write its CSV tables.
#[derive(Debug, Parser)]
#[command(name = "coagkit", version)]
struct Cli {
    study: StudyArg,
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the configuration.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads for independent cases (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Accepted for scripting symmetry; every run is deterministic already.
    #[arg(long)]
    seedless: bool,
}

fn run(cli: Cli) -> coagkit::Result<()> {
    let mut cfg = ExperimentConfig::from_file(&cli.config)?;
    let requested = Study::from(cli.study);
    if cfg.study != requested {
        return Err(coagkit::Error::Config(format!(
            "{} is a {} config, but {requested} was requested",
            cli.config.display(),
            cfg.study
        )));
    }
    if let Some(dir) = cli.output_dir {
        cfg.output_dir = dir;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| coagkit::Error::Config(format!("thread pool: {e}")))?;
    }
    let report = run_study(&cfg)?;
    for path in report.write_all(&cfg.output_dir)? {
        println!("wrote {}", path.display());
    }
    for f in &report.failures {
        eprintln!("case failed: {} n={} x_max={}: {}", f.scheme.name(), f.n, f.x_max, f.message);
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
