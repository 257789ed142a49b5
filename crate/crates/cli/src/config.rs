//! Run configuration, parsed from a TOML file. Unknown keys are rejected.

use std::path::Path;

use noisy_is::{EstimatorKind, NoiseChannel, Problem};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub format: Format,
    /// File path, or `-` for standard output.
    #[serde(default = "default_path")]
    pub path: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            format: Format::default(),
            path: default_path(),
        }
    }
}

fn default_path() -> String {
    "-".to_string()
}

fn default_alpha() -> f64 {
    0.05
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Is
}

/// A single sample size or a grid of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSizes {
    One(usize),
    Grid(Vec<usize>),
}

impl SampleSizes {
    pub fn as_grid(&self) -> Vec<usize> {
        match self {
            SampleSizes::One(n) => vec![*n],
            SampleSizes::Grid(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<NoiseChannel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<NoiseChannel>>,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
    pub n: SampleSizes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Lognormal γ grid for `sweep`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    #[serde(default)]
    pub output: OutputSpec,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), CliError> {
        self.problem
            .integrand
            .validate()
            .map_err(|e| config_error(format!("problem.integrand: {e}")))?;
        if self.channel.is_some() && self.channels.is_some() {
            return Err(config_error(
                "`channel` and `channels` are mutually exclusive",
            ));
        }
        if matches!(&self.channels, Some(c) if c.is_empty()) {
            return Err(config_error("`channels` must not be empty"));
        }
        let grid = self.n.as_grid();
        if grid.is_empty() {
            return Err(config_error("`n` must not be empty"));
        }
        if let Some(bad) = grid.iter().find(|&&n| n < 2) {
            return Err(config_error(format!("`n` must be at least 2, got {bad}")));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_error("`n` grid must be strictly increasing"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(config_error(format!(
                "`alpha` must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let Some(r) = self.replicates {
            if r < 2 {
                return Err(config_error(format!(
                    "`replicates` must be at least 2, got {r}"
                )));
            }
        }
        if let Some(g) = &self.gammas {
            if g.first() != Some(&0.0) {
                return Err(config_error("`gammas` must start at 0"));
            }
            if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(config_error(
                    "`gammas` must be finite and strictly increasing",
                ));
            }
        }
        Ok(())
    }

    /// The configured channels; identity when none is given.
    pub fn channel_list(&self) -> Vec<NoiseChannel> {
        match (&self.channel, &self.channels) {
            (Some(c), _) => vec![*c],
            (None, Some(cs)) => cs.clone(),
            (None, None) => vec![NoiseChannel::IDENTITY],
        }
    }

    /// The single channel used by `estimate` and `oracle`.
    pub fn single_channel(&self) -> Result<NoiseChannel, CliError> {
        match self.channel_list().as_slice() {
            [c] => Ok(*c),
            _ => Err(config_error("this command takes a single `channel`")),
        }
    }

    pub fn single_n(&self) -> Result<usize, CliError> {
        match self.n {
            SampleSizes::One(n) => Ok(n),
            SampleSizes::Grid(ref g) if g.len() == 1 => Ok(g[0]),
            SampleSizes::Grid(_) => Err(config_error("this command takes a single `n`")),
        }
    }

    pub fn replicates(&self) -> Result<usize, CliError> {
        self.replicates
            .ok_or_else(|| config_error("missing key `replicates`"))
    }
}
