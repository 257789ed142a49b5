//! Importance sampling estimators: plain, noisy, self-normalized, and
//! sampling importance resampling.
//!
//! Unnormalized estimators exponentiate `log w + z` directly; any shift would
//! change the estimate. The self-normalized estimator subtracts the maximum
//! log-weight first, which cancels in the ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{log_weight, Problem, WeightedDraw};
use crate::noise::NoiseChannel;
use crate::oracle::{oracle_second_moment_fw, oracle_sigma2};
use crate::rng::{self, CounterStream, StreamId};
use crate::sum::{chunked_map_sum, chunked_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Is,
    NoisyIs,
    Snis,
    NoisySnis,
}

impl EstimatorKind {
    pub fn is_self_normalized(self) -> bool {
        matches!(self, EstimatorKind::Snis | EstimatorKind::NoisySnis)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Is => "is",
            EstimatorKind::NoisyIs => "noisy_is",
            EstimatorKind::Snis => "snis",
            EstimatorKind::NoisySnis => "noisy_snis",
        }
    }
}

/// Point estimate with its Gaussian confidence interval and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Kong's effective sample size `(Σw)² / Σw²`.
    pub ess: f64,
    pub n: usize,
    pub estimator_kind: EstimatorKind,
}

impl EstimateReport {
    /// True when every numeric field matches bit for bit.
    pub fn same_numbers(&self, other: &EstimateReport) -> bool {
        self.estimate.to_bits() == other.estimate.to_bits()
            && self.std_error.to_bits() == other.std_error.to_bits()
            && self.ci_lo.to_bits() == other.ci_lo.to_bits()
            && self.ci_hi.to_bits() == other.ci_hi.to_bits()
            && self.ess.to_bits() == other.ess.to_bits()
            && self.n == other.n
    }
}

/// The terms of the noisy variance decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceBudget {
    /// `σ²(f) = var_q[f w]`.
    pub sigma2: f64,
    /// `var_g[exp Z]`.
    pub var_exp_z: f64,
    /// `E_q[(f w)²]`.
    pub second_moment_fw: f64,
    /// `σ̄²(f) = σ²(f) + var_g[exp Z] · E_q[(f w)²]`.
    pub sigma2_bar: f64,
}

impl VarianceBudget {
    pub fn assemble(sigma2: f64, var_exp_z: f64, second_moment_fw: f64) -> Self {
        Self {
            sigma2,
            var_exp_z,
            second_moment_fw,
            sigma2_bar: sigma2 + var_exp_z * second_moment_fw,
        }
    }

    /// `σ̄² / σ²`.
    pub fn inflation(&self) -> f64 {
        self.sigma2_bar / self.sigma2
    }
}

/// `z_{1 − α/2}` of the standard normal.
pub fn normal_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let std = Normal::standard();
    Ok(std.inverse_cdf(1.0 - 0.5 * alpha))
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "n must be at least 2, got {n}"
        )));
    }
    Ok(())
}

/// Draws `(x, z)` on the extended space and evaluates both log-weights.
///
/// `x` comes from the proposal stream and `z` from the noise stream of the
/// same seed, so runs that differ only in the channel share their `x`.
pub fn sample_extended(
    problem: &Problem,
    channel: &NoiseChannel,
    n: usize,
    seed: u64,
) -> Result<Vec<WeightedDraw>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let xs = CounterStream::new(seed, StreamId::PROPOSAL);
    let zs = CounterStream::new(seed, StreamId::NOISE);
    let noisy = !channel.is_degenerate();
    let mut out = vec![WeightedDraw::default(); n];
    // Each chunk reports its first support violation, if any.
    let failures: Vec<Option<f64>> = out
        .par_chunks_mut(rng::CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let start = (c * rng::CHUNK) as u64;
            let mut x_words = xs.iter_from(start);
            let mut z_words = noisy.then(|| zs.iter_from(start));
            let mut failure = None;
            for slot in chunk.iter_mut() {
                let x = problem
                    .proposal
                    .sample(&x_words.next().expect("endless stream"));
                let z = match z_words.as_mut() {
                    Some(it) => channel.sample(&it.next().expect("endless stream")),
                    None => 0.0,
                };
                match log_weight(&problem.target, &problem.proposal, x) {
                    Ok(lw) => *slot = WeightedDraw::new(x, z, lw),
                    Err(_) => {
                        failure.get_or_insert(x);
                    }
                }
            }
            failure
        })
        .collect();
    if let Some(x) = failures.into_iter().flatten().next() {
        return Err(Error::SupportViolation { x });
    }
    Ok(out)
}

/// `I_N = (1/N) Σ f(x_i) w(x_i)`.
pub fn estimate_is(problem: &Problem, n: usize, seed: u64, alpha: f64) -> Result<EstimateReport> {
    check_n(n)?;
    let draws = sample_extended(problem, &NoiseChannel::IDENTITY, n, seed)?;
    unnormalized_report(&draws, &problem.integrand, alpha, EstimatorKind::Is)
}

/// `Ī_N = (1/N) Σ f(x_i) w(x_i) exp(z_i)`.
pub fn estimate_noisy_is(
    problem: &Problem,
    channel: &NoiseChannel,
    n: usize,
    seed: u64,
    alpha: f64,
) -> Result<EstimateReport> {
    check_n(n)?;
    let draws = sample_extended(problem, channel, n, seed)?;
    unnormalized_report(&draws, &problem.integrand, alpha, EstimatorKind::NoisyIs)
}

/// Mean, `(n−1)`-divisor standard error and ESS of the terms
/// `f(x_i) exp(log_w_noisy_i)`.
pub fn unnormalized_report(
    draws: &[WeightedDraw],
    f: &crate::model::Integrand,
    alpha: f64,
    kind: EstimatorKind,
) -> Result<EstimateReport> {
    check_n(draws.len())?;
    let z = normal_quantile(alpha)?;
    let n = draws.len() as f64;
    let terms: Vec<f64> = draws
        .par_iter()
        .map(|d| f.eval(d.x) * d.log_w_noisy.exp())
        .collect();
    let estimate = chunked_sum(&terms) / n;
    let s2 = chunked_map_sum(&terms, |t| (t - estimate) * (t - estimate)) / (n - 1.0);
    let std_error = (s2 / n).sqrt();
    let log_w: Vec<f64> = draws.iter().map(|d| d.log_w_noisy).collect();
    let (ess, _) = shifted_ess(&log_w)?;
    Ok(EstimateReport {
        estimate,
        std_error,
        ci_lo: estimate - z * std_error,
        ci_hi: estimate + z * std_error,
        ess,
        n: draws.len(),
        estimator_kind: kind,
    })
}

/// Kong's ESS from log-weights, after a max-shift. Also returns the shift.
fn shifted_ess(log_w: &[f64]) -> Result<(f64, f64)> {
    let m = max_log_weight(log_w)?;
    let u: Vec<f64> = log_w.par_iter().map(|l| (l - m).exp()).collect();
    let s = chunked_sum(&u);
    let s2 = chunked_map_sum(&u, |v| v * v);
    Ok(((s * s / s2).min(log_w.len() as f64), m))
}

fn max_log_weight(log_w: &[f64]) -> Result<f64> {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if log_w.iter().any(|l| l.is_nan()) || m == f64::INFINITY {
        return Err(Error::InvalidParameter(
            "log-weights must not be NaN or +inf".into(),
        ));
    }
    if m == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights("all weights are zero"));
    }
    Ok(m)
}

/// Self-normalized estimate `Σ w̄_i f(x_i) / Σ w̄_i` on the extended space.
/// Reports `snis` for a degenerate channel and `noisy_snis` otherwise.
pub fn estimate_snis(
    problem: &Problem,
    channel: &NoiseChannel,
    n: usize,
    seed: u64,
    alpha: f64,
) -> Result<EstimateReport> {
    check_n(n)?;
    let draws = sample_extended(problem, channel, n, seed)?;
    let f_vals: Vec<f64> = draws.iter().map(|d| problem.integrand.eval(d.x)).collect();
    let log_w: Vec<f64> = draws.iter().map(|d| d.log_w_noisy).collect();
    let kind = if channel.is_degenerate() {
        EstimatorKind::Snis
    } else {
        EstimatorKind::NoisySnis
    };
    snis_report(&f_vals, &log_w, alpha, kind)
}

/// Self-normalized ratio estimate from integrand values and log-weights.
///
/// Every quantity depends on the log-weights only through `log_w_i − max`,
/// so a shift that is exact in floating point leaves all fields bit-identical.
/// The standard error is the delta-method plug-in `√(Σ ŵ_i² (f_i − μ̂)²)`.
pub fn snis_report(
    f_vals: &[f64],
    log_w: &[f64],
    alpha: f64,
    kind: EstimatorKind,
) -> Result<EstimateReport> {
    if f_vals.len() != log_w.len() {
        return Err(Error::InvalidParameter(
            "f values and log-weights differ in length".into(),
        ));
    }
    check_n(log_w.len())?;
    let z = normal_quantile(alpha)?;
    let m = max_log_weight(log_w)?;
    let u: Vec<f64> = log_w.par_iter().map(|l| (l - m).exp()).collect();
    let total = chunked_sum(&u);
    let pairs: Vec<(f64, f64)> = f_vals.iter().copied().zip(u.iter().copied()).collect();
    let first = f_vals[0];
    let estimate = if f_vals.iter().all(|&f| f == first) {
        // The ratio of a constant is the constant.
        first
    } else {
        chunked_map_sum(&pairs, |&(f, w)| f * w) / total
    };
    let s2 = chunked_map_sum(&pairs, |&(f, w)| {
        let wn = w / total;
        let d = f - estimate;
        wn * wn * d * d
    });
    let std_error = s2.sqrt();
    let sum_sq = chunked_map_sum(&u, |v| v * v);
    let ess = (total * total / sum_sq).min(log_w.len() as f64);
    Ok(EstimateReport {
        estimate,
        std_error,
        ci_lo: estimate - z * std_error,
        ci_hi: estimate + z * std_error,
        ess,
        n: log_w.len(),
        estimator_kind: kind,
    })
}

/// Multinomial resampling of `m` points with probability proportional to
/// `exp(log_w_noisy)`, by inverse CDF over the atoms in input order.
pub fn sir_resample(draws: &[WeightedDraw], m: usize, seed: u64) -> Result<Vec<f64>> {
    if draws.is_empty() {
        return Err(Error::InvalidParameter(
            "sir_resample needs at least one draw".into(),
        ));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let log_w: Vec<f64> = draws.iter().map(|d| d.log_w_noisy).collect();
    let shift = max_log_weight(&log_w)?;
    let mut cdf = Vec::with_capacity(draws.len());
    let mut acc = 0.0;
    for l in &log_w {
        acc += (l - shift).exp();
        cdf.push(acc);
    }
    let last = draws.len() - 1;
    let stream = CounterStream::new(seed, StreamId::RESAMPLE);
    Ok(stream.generate(m, |w| {
        let target = w.uniform(0) * acc;
        let idx = cdf.partition_point(|c| *c <= target).min(last);
        draws[idx].x
    }))
}

/// Oracle variance terms for `problem` under `channel`.
pub fn variance_budget(problem: &Problem, channel: &NoiseChannel) -> Result<VarianceBudget> {
    let sigma2 = oracle_sigma2(&problem.target, &problem.proposal, &problem.integrand)?;
    let m2 = oracle_second_moment_fw(&problem.target, &problem.proposal, &problem.integrand)?;
    Ok(VarianceBudget::assemble(sigma2, channel.var_exp_z(), m2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{draw_batch, Density, Integrand};
    use crate::noise::sample_noise;

    fn canonical() -> Problem {
        Problem::new(
            Density::gaussian(0.0, 1.0).unwrap(),
            Density::gaussian(0.0, 2.0).unwrap(),
            Integrand::Square,
        )
    }

    fn same(f: Integrand) -> Problem {
        let n = Density::gaussian(0.0, 1.0).unwrap();
        Problem::new(n.clone(), n, f)
    }

    #[test]
    fn constant_terms_are_exact() {
        for seed in [0, 1, 99] {
            let r = estimate_is(&same(Integrand::Constant { c: 3.0 }), 1000, seed, 0.05).unwrap();
            assert_eq!(r.estimate, 3.0);
            assert_eq!(r.std_error, 0.0);
            assert_eq!(r.ess, 1000.0);
            assert_eq!((r.ci_lo, r.ci_hi), (3.0, 3.0));
        }
    }

    #[test]
    fn canonical_estimate_near_truth() {
        let r = estimate_is(&canonical(), 1_000_000, 7, 0.05).unwrap();
        assert!((r.estimate - 1.0).abs() < 5.0 * r.std_error, "{r:?}");
        assert!(r.ci_lo <= r.estimate && r.estimate <= r.ci_hi);
        assert!(r.ess > 0.0 && r.ess <= 1e6);
    }

    #[test]
    fn identity_channel_matches_plain() {
        let a = estimate_is(&canonical(), 5000, 3, 0.1).unwrap();
        let b = estimate_noisy_is(&canonical(), &NoiseChannel::IDENTITY, 5000, 3, 0.1).unwrap();
        assert!(a.same_numbers(&b));
        assert_eq!(b.estimator_kind, EstimatorKind::NoisyIs);
    }

    #[test]
    fn noisy_and_clean_share_x() {
        let ch = NoiseChannel::lognormal(0.5).unwrap();
        let clean = sample_extended(&canonical(), &NoiseChannel::IDENTITY, 100, 4).unwrap();
        let noisy = sample_extended(&canonical(), &ch, 100, 4).unwrap();
        for (c, d) in clean.iter().zip(&noisy) {
            assert_eq!(c.x, d.x);
            assert_eq!(c.log_w, d.log_w);
            assert_eq!(d.log_w_noisy, d.log_w + d.z);
        }
    }

    #[test]
    fn extended_draws_match_separate_streams() {
        let ch = NoiseChannel::two_point(0.5, 2.0, 2.0 / 3.0).unwrap();
        let d = sample_extended(&canonical(), &ch, 9000, 21).unwrap();
        let x = draw_batch(&canonical().proposal, 9000, 21).unwrap();
        let z = sample_noise(&ch, 9000, 21).unwrap();
        for i in 0..9000 {
            assert_eq!(d[i].x, x[i]);
            assert_eq!(d[i].z, z[i]);
        }
    }

    #[test]
    fn snis_equal_weights_is_arithmetic_mean() {
        let p = same(Integrand::Identity);
        let r = estimate_snis(&p, &NoiseChannel::IDENTITY, 5, 12, 0.05).unwrap();
        let x = draw_batch(&p.proposal, 5, 12).unwrap();
        assert_eq!(r.estimate, x.iter().sum::<f64>() / 5.0);
        assert_eq!(r.ess, 5.0);
        assert_eq!(r.estimator_kind, EstimatorKind::Snis);
    }

    #[test]
    fn snis_constant_is_exact() {
        let p = Problem::new(
            Density::gaussian(1.0, 1.0).unwrap(),
            Density::gaussian(0.0, 2.0).unwrap(),
            Integrand::Constant { c: 0.1 },
        );
        let ch = NoiseChannel::lognormal(0.5).unwrap();
        let r = estimate_snis(&p, &ch, 10_000, 5, 0.05).unwrap();
        assert_eq!(r.estimate, 0.1);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.estimator_kind, EstimatorKind::NoisySnis);
    }

    #[test]
    fn snis_rejects_dead_weights() {
        let f = [1.0, 2.0];
        let lw = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert!(matches!(
            snis_report(&f, &lw, 0.05, EstimatorKind::Snis),
            Err(Error::DegenerateWeights(_))
        ));
    }

    #[test]
    fn sir_single_atom() {
        let d = [WeightedDraw::new(2.5, 0.0, -40.0)];
        let out = sir_resample(&d, 100, 1).unwrap();
        assert!(out.iter().all(|&x| x == 2.5));
    }

    #[test]
    fn sir_zero_weight_atom_never_chosen() {
        let d = [
            WeightedDraw::new(0.0, 0.0, f64::NEG_INFINITY),
            WeightedDraw::new(1.0, 0.0, 0.0),
            WeightedDraw::new(2.0, 0.0, f64::NEG_INFINITY),
        ];
        let out = sir_resample(&d, 10_000, 2).unwrap();
        assert!(out.iter().all(|&x| x == 1.0));
        let dead = [WeightedDraw::new(0.0, 0.0, f64::NEG_INFINITY)];
        assert!(matches!(
            sir_resample(&dead, 1, 0),
            Err(Error::DegenerateWeights(_))
        ));
    }

    #[test]
    fn budget_assembly() {
        let b = VarianceBudget::assemble(2.0, 0.5, 3.0);
        assert_eq!(b.sigma2_bar, 3.5);
        let id = variance_budget(&canonical(), &NoiseChannel::IDENTITY).unwrap();
        assert_eq!(id.sigma2_bar, id.sigma2);
    }

    #[test]
    fn argument_validation() {
        assert!(estimate_is(&canonical(), 1, 0, 0.05).is_err());
        assert!(estimate_is(&canonical(), 10, 0, 0.0).is_err());
        assert!(estimate_is(&canonical(), 10, 0, 1.0).is_err());
    }

    #[test]
    fn support_violation_propagates() {
        let p = Problem::new(
            Density::gaussian(0.0, 1.0).unwrap(),
            Density::uniform(-0.1, 0.1).unwrap(),
            Integrand::Identity,
        );
        // Every draw lies inside the proposal, where the target is positive,
        // so sampling itself succeeds; the oracle rejects the pair.
        assert!(estimate_is(&p, 100, 0, 0.05).is_ok());
        assert_eq!(
            variance_budget(&p, &NoiseChannel::IDENTITY)
                .unwrap_err()
                .kind(),
            "SupportViolation"
        );
    }
}
