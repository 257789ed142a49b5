//! Command-line front end: one TOML config per invocation, dispatched to the
//! estimators, the replicate study engine, or the oracle.

pub mod config;
pub mod output;

use std::fmt;
use std::io::Write;
use std::path::Path;

use noisy_is::{
    estimate_is, estimate_noisy_is, estimate_snis, oracle_mean, run_study, sweep_gamma,
    variance_budget, EstimatorKind, StudySpec,
};

use config::{Format, RunConfig};

/// Failure of a CLI invocation, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration: exit 2.
    Config(String),
    /// Numeric or domain failure in the library: exit 3.
    Domain(noisy_is::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Domain(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<noisy_is::Error> for CliError {
    fn from(e: noisy_is::Error) -> Self {
        match e {
            noisy_is::Error::InvalidParameter(msg) => CliError::Config(msg),
            other => CliError::Domain(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate { budget: bool },
    Study,
    Sweep,
    Oracle,
}

/// Renders the output of `command` for `cfg` in `format`.
pub fn render(command: Command, cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let text = match command {
        Command::Estimate { budget } => {
            let n = cfg.single_n()?;
            let channel = cfg.single_channel()?;
            let report = match cfg.estimator {
                EstimatorKind::Is if !channel.is_degenerate() => {
                    return Err(CliError::Config(
                        "`estimator = \"is\"` does not take a noise channel; use `noisy_is`".into(),
                    ));
                }
                EstimatorKind::Is => estimate_is(&cfg.problem, n, cfg.seed, cfg.alpha)?,
                EstimatorKind::NoisyIs => {
                    estimate_noisy_is(&cfg.problem, &channel, n, cfg.seed, cfg.alpha)?
                }
                EstimatorKind::Snis | EstimatorKind::NoisySnis => {
                    estimate_snis(&cfg.problem, &channel, n, cfg.seed, cfg.alpha)?
                }
            };
            let budget = if budget {
                Some(variance_budget(&cfg.problem, &channel)?)
            } else {
                None
            };
            match format {
                Format::Csv => output::estimate_csv(&report, budget.as_ref()),
                Format::Json => json_text(&output::estimate_json(cfg, &report, budget.as_ref())),
            }
        }
        Command::Study => {
            let spec = StudySpec {
                problem: cfg.problem.clone(),
                channels: cfg.channel_list(),
                n_grid: cfg.n.as_grid(),
                replicates: cfg.replicates()?,
                base_seed: cfg.seed,
                estimator_kind: cfg.estimator,
                alpha: cfg.alpha,
            };
            let result = run_study(&spec)?;
            match format {
                Format::Csv => output::study_csv(&result),
                Format::Json => json_text(&output::study_json(cfg, &result)),
            }
        }
        Command::Sweep => {
            let gammas = cfg
                .gammas
                .as_ref()
                .ok_or_else(|| CliError::Config("missing key `gammas`".into()))?;
            let rows = sweep_gamma(
                &cfg.problem,
                gammas,
                cfg.single_n()?,
                cfg.replicates()?,
                cfg.seed,
            )?;
            match format {
                Format::Csv => output::sweep_csv(&rows),
                Format::Json => json_text(&output::sweep_json(cfg, &rows)),
            }
        }
        Command::Oracle => {
            let channel = cfg.single_channel()?;
            let mean = oracle_mean(&cfg.problem.target, &cfg.problem.integrand)?;
            let budget = variance_budget(&cfg.problem, &channel)?;
            match format {
                Format::Csv => output::oracle_csv(mean, &budget),
                Format::Json => json_text(&output::oracle_json(cfg, mean, &budget)),
            }
        }
    };
    Ok(text)
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Options shared by every subcommand; flags override the config's `output` block.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub format: Option<Format>,
    pub output: Option<String>,
    pub threads: usize,
}

/// Loads the config, runs the command on a pool of `threads` workers and
/// writes the result.
pub fn run(command: Command, config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path)?;
    let format = overrides.format.unwrap_or(cfg.output.format);
    let path = overrides
        .output
        .clone()
        .unwrap_or_else(|| cfg.output.path.clone());
    let threads = overrides.threads.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} threads: {e}")))?;
    let text = pool.install(|| render(command, &cfg, format))?;
    write_output(&path, &text)
}

fn write_output(path: &str, text: &str) -> Result<(), CliError> {
    if path == "-" {
        let mut out = std::io::stdout().lock();
        out.write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| CliError::Config(format!("cannot write to standard output: {e}")))
    } else {
        std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {path}: {e}")))
    }
}
