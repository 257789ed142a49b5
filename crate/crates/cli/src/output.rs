//! CSV and JSON rendering. Floats use Rust's shortest round-trip decimal
//! form, so rendering is a pure function of the bits.

use noisy_is::{EstimateReport, StudyResult, SweepRow, VarianceBudget};
use serde_json::{json, Value};

use crate::config::RunConfig;

pub const ESTIMATE_HEADER: &str = "estimator,n,estimate,std_error,ci_lo,ci_hi,ess";
pub const BUDGET_COLUMNS: &str = "sigma2,var_exp_z,second_moment_fw,sigma2_bar";
pub const STUDY_HEADER: &str = "channel,n,replicates,replicate_mean,replicate_var,predicted_var,inflation_ratio_empirical,inflation_ratio_predicted,ci_coverage,ess_mean";
pub const SWEEP_HEADER: &str = "gamma,n,replicates,empirical_var,predicted_var,inflation_empirical,inflation_predicted,ess_mean";
pub const ORACLE_HEADER: &str = "oracle_mean,sigma2,var_exp_z,second_moment_fw,sigma2_bar";

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn budget_fields(b: &VarianceBudget) -> String {
    [b.sigma2, b.var_exp_z, b.second_moment_fw, b.sigma2_bar]
        .map(num)
        .join(",")
}

pub fn estimate_csv(report: &EstimateReport, budget: Option<&VarianceBudget>) -> String {
    let mut header = ESTIMATE_HEADER.to_string();
    let mut row = format!(
        "{},{},{},{},{},{},{}",
        report.estimator_kind.as_str(),
        report.n,
        num(report.estimate),
        num(report.std_error),
        num(report.ci_lo),
        num(report.ci_hi),
        num(report.ess),
    );
    if let Some(b) = budget {
        header.push(',');
        header.push_str(BUDGET_COLUMNS);
        row.push(',');
        row.push_str(&budget_fields(b));
    }
    format!("{header}\n{row}\n")
}

pub fn estimate_json(
    cfg: &RunConfig,
    report: &EstimateReport,
    budget: Option<&VarianceBudget>,
) -> Value {
    let mut v = json!({ "spec": cfg, "report": report });
    if let Some(b) = budget {
        v["budget"] = json!(b);
    }
    v
}

pub fn study_csv(result: &StudyResult) -> String {
    let mut out = String::from(STUDY_HEADER);
    out.push('\n');
    for c in &result.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            c.channel.label(),
            c.n,
            c.replicates,
            num(c.replicate_mean),
            num(c.replicate_var),
            opt(c.predicted_var),
            num(c.inflation_ratio_empirical),
            opt(c.inflation_ratio_predicted),
            num(c.ci_coverage),
            num(c.ess_mean),
        ));
    }
    out
}

pub fn study_json(cfg: &RunConfig, result: &StudyResult) -> Value {
    json!({ "spec": cfg, "truth": result.truth, "cells": result.cells })
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            num(r.gamma),
            r.n,
            r.replicates,
            num(r.empirical_var),
            num(r.predicted_var),
            num(r.inflation_empirical),
            num(r.inflation_predicted),
            num(r.ess_mean),
        ));
    }
    out
}

pub fn sweep_json(cfg: &RunConfig, rows: &[SweepRow]) -> Value {
    json!({ "spec": cfg, "cells": rows })
}

pub fn oracle_csv(mean: f64, b: &VarianceBudget) -> String {
    format!("{ORACLE_HEADER}\n{},{}\n", num(mean), budget_fields(b))
}

pub fn oracle_json(cfg: &RunConfig, mean: f64, b: &VarianceBudget) -> Value {
    json!({
        "spec": cfg,
        "oracle_mean": mean,
        "sigma2": b.sigma2,
        "var_exp_z": b.var_exp_z,
        "second_moment_fw": b.second_moment_fw,
        "sigma2_bar": b.sigma2_bar,
    })
}
