//! Replicate studies: run an estimator `R` times per (channel, n) cell and
//! compare the replicate mean and variance with the oracle predictions.
//!
//! Replicate `r` uses seed `base_seed + r` for every cell. Because `x` and `z`
//! come from separate streams, all channels at a given `(n, r)` see the same
//! proposal draws, and inflation ratios are paired.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    estimate_is, estimate_noisy_is, estimate_snis, variance_budget, EstimateReport, EstimatorKind,
    VarianceBudget,
};
use crate::model::Problem;
use crate::noise::NoiseChannel;
use crate::oracle::oracle_mean;
use crate::sum::{chunked_map_sum, chunked_sum};

const SWEEP_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub problem: Problem,
    pub channels: Vec<NoiseChannel>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    /// `is`/`noisy_is` run the unnormalized estimator under each channel,
    /// `snis`/`noisy_snis` the self-normalized one.
    pub estimator_kind: EstimatorKind,
    pub alpha: f64,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidParameter(
                "replicates must be at least 2".into(),
            ));
        }
        if self.n_grid.is_empty() {
            return Err(Error::InvalidParameter("n grid must not be empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "n grid must be strictly increasing".into(),
            ));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::InvalidParameter("every n must be at least 2".into()));
        }
        if self.channels.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one channel is required".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        self.problem.integrand.validate()
    }
}

/// Summary of the replicates in one (channel, n) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub channel: NoiseChannel,
    pub n: usize,
    pub replicates: usize,
    pub replicate_mean: f64,
    /// `(R−1)`-divisor variance of the replicate estimates.
    pub replicate_var: f64,
    /// `σ̄²/n` from the oracle; absent for self-normalized estimators.
    pub predicted_var: Option<f64>,
    /// `replicate_var` over that of the paired noiseless cell.
    pub inflation_ratio_empirical: f64,
    /// `σ̄²/σ²`; absent for self-normalized estimators.
    pub inflation_ratio_predicted: Option<f64>,
    /// Fraction of replicate intervals containing the oracle truth.
    pub ci_coverage: f64,
    pub ess_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    /// `E_π[f]` from the oracle.
    pub truth: f64,
    pub cells: Vec<StudyCell>,
}

/// One row of a γ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub n: usize,
    pub replicates: usize,
    pub empirical_var: f64,
    pub predicted_var: f64,
    pub inflation_empirical: f64,
    pub inflation_predicted: f64,
    pub ess_mean: f64,
}

fn run_replicates(
    spec: &StudySpec,
    channel: &NoiseChannel,
    n: usize,
) -> Result<Vec<EstimateReport>> {
    let reports: Vec<Result<EstimateReport>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = spec.base_seed.wrapping_add(r as u64);
            if spec.estimator_kind.is_self_normalized() {
                estimate_snis(&spec.problem, channel, n, seed, spec.alpha)
            } else if channel.is_degenerate() {
                estimate_is(&spec.problem, n, seed, spec.alpha)
            } else {
                estimate_noisy_is(&spec.problem, channel, n, seed, spec.alpha)
            }
        })
        .collect();
    reports.into_iter().collect()
}

/// Sample mean and `(R−1)`-divisor variance.
pub fn mean_and_var(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = chunked_sum(values) / r;
    let var = chunked_map_sum(values, |v| (v - mean) * (v - mean)) / (r - 1.0);
    (mean, var)
}

pub fn run_study(spec: &StudySpec) -> Result<StudyResult> {
    spec.validate()?;
    let truth = oracle_mean(&spec.problem.target, &spec.problem.integrand)?;
    let budgets: Option<Vec<VarianceBudget>> = if spec.estimator_kind.is_self_normalized() {
        None
    } else {
        Some(
            spec.channels
                .iter()
                .map(|c| variance_budget(&spec.problem, c))
                .collect::<Result<_>>()?,
        )
    };

    let mut per_n = Vec::with_capacity(spec.n_grid.len());
    for &n in &spec.n_grid {
        let clean = run_replicates(spec, &NoiseChannel::IDENTITY, n)?;
        let clean_var = mean_and_var(&estimates(&clean)).1;
        let mut cells = Vec::with_capacity(spec.channels.len());
        for (k, channel) in spec.channels.iter().enumerate() {
            let reports = if channel.is_degenerate() {
                clean.clone()
            } else {
                run_replicates(spec, channel, n)?
            };
            let (replicate_mean, replicate_var) = mean_and_var(&estimates(&reports));
            let covered = reports
                .iter()
                .filter(|r| r.ci_lo <= truth && truth <= r.ci_hi)
                .count();
            let ess: Vec<f64> = reports.iter().map(|r| r.ess).collect();
            let budget = budgets.as_ref().map(|b| b[k]);
            cells.push(StudyCell {
                channel: *channel,
                n,
                replicates: spec.replicates,
                replicate_mean,
                replicate_var,
                predicted_var: budget.map(|b| b.sigma2_bar / n as f64),
                inflation_ratio_empirical: replicate_var / clean_var,
                inflation_ratio_predicted: budget.map(|b| b.inflation()),
                ci_coverage: covered as f64 / spec.replicates as f64,
                ess_mean: chunked_sum(&ess) / ess.len() as f64,
            });
        }
        per_n.push(cells);
    }

    // Channel-major order.
    let mut cells = Vec::with_capacity(spec.channels.len() * spec.n_grid.len());
    for k in 0..spec.channels.len() {
        for row in &per_n {
            cells.push(row[k].clone());
        }
    }
    Ok(StudyResult { truth, cells })
}

fn estimates(reports: &[EstimateReport]) -> Vec<f64> {
    reports.iter().map(|r| r.estimate).collect()
}

/// Noisy IS under lognormal channels on a γ grid. `gammas` must start at 0
/// and increase strictly.
pub fn sweep_gamma(
    problem: &Problem,
    gammas: &[f64],
    n: usize,
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    if gammas.first() != Some(&0.0) {
        return Err(Error::InvalidParameter("gamma grid must start at 0".into()));
    }
    if gammas
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
    {
        return Err(Error::InvalidParameter(
            "gamma grid must be strictly increasing".into(),
        ));
    }
    let channels = gammas
        .iter()
        .map(|&g| NoiseChannel::lognormal(g))
        .collect::<Result<Vec<_>>>()?;
    let spec = StudySpec {
        problem: problem.clone(),
        channels,
        n_grid: vec![n],
        replicates,
        base_seed,
        estimator_kind: EstimatorKind::NoisyIs,
        alpha: SWEEP_ALPHA,
    };
    let result = run_study(&spec)?;
    Ok(gammas
        .iter()
        .zip(result.cells)
        .map(|(&gamma, c)| SweepRow {
            gamma,
            n: c.n,
            replicates: c.replicates,
            empirical_var: c.replicate_var,
            predicted_var: c.predicted_var.expect("unnormalized study has predictions"),
            inflation_empirical: c.inflation_ratio_empirical,
            inflation_predicted: c
                .inflation_ratio_predicted
                .expect("unnormalized study has predictions"),
            ess_mean: c.ess_mean,
        })
        .collect())
}

/// Least-squares `(slope, intercept)` of empirical against predicted variance.
pub fn variance_law_fit(rows: &[SweepRow]) -> (f64, f64) {
    let k = rows.len() as f64;
    let mx = rows.iter().map(|r| r.predicted_var).sum::<f64>() / k;
    let my = rows.iter().map(|r| r.empirical_var).sum::<f64>() / k;
    let sxy: f64 = rows
        .iter()
        .map(|r| (r.predicted_var - mx) * (r.empirical_var - my))
        .sum();
    let sxx: f64 = rows.iter().map(|r| (r.predicted_var - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
