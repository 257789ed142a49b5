//! Densities, integrands and importance weights, all evaluated in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{CounterStream, DrawWords, StreamId};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// One component of a Gaussian mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

/// The closed set of univariate families a [`Density`] can take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityFamily {
    Gaussian { mean: f64, variance: f64 },
    GaussianMixture { components: Vec<MixtureComponent> },
    Uniform { lo: f64, hi: f64 },
}

/// A normalized univariate density with a sampler. Used both as target and
/// as proposal.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "DensityFamily", into = "DensityFamily")]
pub struct Density {
    family: DensityFamily,
    /// `(log weight − log normalizer, mean, 1 / (2 variance))` per Gaussian piece.
    terms: Vec<(f64, f64, f64)>,
}

impl PartialEq for Density {
    fn eq(&self, other: &Self) -> bool {
        self.family == other.family
    }
}

fn check_variance(variance: f64) -> Result<()> {
    if variance.is_finite() && variance > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "variance must be finite and > 0, got {variance}"
        )))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

impl Density {
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        DensityFamily::Gaussian { mean, variance }.try_into()
    }

    pub fn mixture(components: Vec<MixtureComponent>) -> Result<Self> {
        DensityFamily::GaussianMixture { components }.try_into()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        DensityFamily::Uniform { lo, hi }.try_into()
    }

    pub fn family(&self) -> &DensityFamily {
        &self.family
    }

    /// `log p(x)`; `-inf` outside the support.
    pub fn log_pdf(&self, x: f64) -> f64 {
        match &self.family {
            DensityFamily::Gaussian { .. } => {
                let (c, m, k) = self.terms[0];
                let d = x - m;
                c - d * d * k
            }
            DensityFamily::GaussianMixture { .. } => {
                let piece = |&(c, m, k): &(f64, f64, f64)| {
                    let d = x - m;
                    c - d * d * k
                };
                let best = self
                    .terms
                    .iter()
                    .map(piece)
                    .fold(f64::NEG_INFINITY, f64::max);
                best + self
                    .terms
                    .iter()
                    .map(|t| (piece(t) - best).exp())
                    .sum::<f64>()
                    .ln()
            }
            DensityFamily::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Maps the words of one counter block to a variate.
    pub fn sample(&self, words: &DrawWords) -> f64 {
        match &self.family {
            DensityFamily::Gaussian { mean, variance } => {
                mean + variance.sqrt() * words.standard_normal(0)
            }
            DensityFamily::GaussianMixture { components } => {
                let u = words.uniform(2);
                let mut acc = 0.0;
                let mut chosen = components[components.len() - 1];
                for c in components {
                    acc += c.weight;
                    if u < acc {
                        chosen = *c;
                        break;
                    }
                }
                chosen.mean + chosen.variance.sqrt() * words.standard_normal(0)
            }
            DensityFamily::Uniform { lo, hi } => {
                let x = lo + (hi - lo) * words.uniform(0);
                // lo + (hi - lo) * u can round up to hi.
                if x < *hi {
                    x
                } else {
                    hi.next_down()
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match &self.family {
            DensityFamily::Gaussian { mean, .. } => *mean,
            DensityFamily::GaussianMixture { components } => {
                components.iter().map(|c| c.weight * c.mean).sum()
            }
            DensityFamily::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.family {
            DensityFamily::Gaussian { variance, .. } => *variance,
            DensityFamily::GaussianMixture { components } => {
                let m = self.mean();
                components
                    .iter()
                    .map(|c| c.weight * (c.variance + (c.mean - m).powi(2)))
                    .sum()
            }
            DensityFamily::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
        }
    }

    /// Closed support bounds; infinite for the Gaussian families.
    pub fn support(&self) -> (f64, f64) {
        match &self.family {
            DensityFamily::Uniform { lo, hi } => (*lo, *hi),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Largest component variance, which governs the Gaussian tail.
    /// `None` for compactly supported densities.
    pub fn tail_variance(&self) -> Option<f64> {
        match &self.family {
            DensityFamily::Gaussian { variance, .. } => Some(*variance),
            DensityFamily::GaussianMixture { components } => {
                components.iter().map(|c| c.variance).reduce(f64::max)
            }
            DensityFamily::Uniform { .. } => None,
        }
    }

    /// `(center, standard deviation)` of each smooth piece. A uniform is
    /// reported by its midpoint and half-width.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        match &self.family {
            DensityFamily::Gaussian { mean, variance } => vec![(*mean, variance.sqrt())],
            DensityFamily::GaussianMixture { components } => components
                .iter()
                .map(|c| (c.mean, c.variance.sqrt()))
                .collect(),
            DensityFamily::Uniform { lo, hi } => vec![(0.5 * (lo + hi), 0.5 * (hi - lo))],
        }
    }
}

impl TryFrom<DensityFamily> for Density {
    type Error = Error;

    fn try_from(family: DensityFamily) -> Result<Self> {
        match &family {
            DensityFamily::Gaussian { mean, variance } => {
                check_finite("mean", *mean)?;
                check_variance(*variance)?;
            }
            DensityFamily::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidParameter(
                        "gaussian_mixture needs at least one component".into(),
                    ));
                }
                for c in components {
                    if !(c.weight > 0.0 && c.weight <= 1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "mixture weight must lie in (0, 1], got {}",
                            c.weight
                        )));
                    }
                    check_finite("mean", c.mean)?;
                    check_variance(c.variance)?;
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "mixture weights must sum to 1, got {total}"
                    )));
                }
            }
            DensityFamily::Uniform { lo, hi } => {
                check_finite("lo", *lo)?;
                check_finite("hi", *hi)?;
                if lo >= hi {
                    return Err(Error::InvalidParameter(format!(
                        "uniform needs lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        let piece = |w: f64, m: f64, v: f64| (w.ln() - 0.5 * (LN_2PI + v.ln()), m, 0.5 / v);
        let terms = match &family {
            DensityFamily::Gaussian { mean, variance } => vec![piece(1.0, *mean, *variance)],
            DensityFamily::GaussianMixture { components } => components
                .iter()
                .map(|c| piece(c.weight, c.mean, c.variance))
                .collect(),
            DensityFamily::Uniform { .. } => Vec::new(),
        };
        Ok(Density { family, terms })
    }
}

impl From<Density> for DensityFamily {
    fn from(d: Density) -> Self {
        d.family
    }
}

/// The function `f` whose expectation under the target is estimated.
/// `indicator` is `1` for `x > threshold` and `0` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum Integrand {
    Identity,
    Square,
    Indicator {
        threshold: f64,
    },
    /// `coeffs[k]` multiplies `x^k`.
    Polynomial {
        coeffs: Vec<f64>,
    },
    Constant {
        c: f64,
    },
}

impl Integrand {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Integrand::Identity => x,
            Integrand::Square => x * x,
            Integrand::Indicator { threshold } => {
                if x > *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            Integrand::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Integrand::Constant { c } => *c,
        }
    }

    /// Polynomial degree of the growth of `|f|`.
    pub fn degree(&self) -> usize {
        match self {
            Integrand::Identity => 1,
            Integrand::Square => 2,
            Integrand::Indicator { .. } | Integrand::Constant { .. } => 0,
            Integrand::Polynomial { coeffs } => coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0),
        }
    }

    /// True when `f` vanishes everywhere.
    pub fn is_zero(&self) -> bool {
        match self {
            Integrand::Constant { c } => *c == 0.0,
            Integrand::Polynomial { coeffs } => coeffs.iter().all(|c| *c == 0.0),
            _ => false,
        }
    }

    /// Points where `f` is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Integrand::Indicator { threshold } => vec![*threshold],
            _ => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Integrand::Indicator { threshold } => check_finite("threshold", *threshold),
            Integrand::Polynomial { coeffs } => coeffs
                .iter()
                .try_for_each(|c| check_finite("polynomial coefficient", *c)),
            Integrand::Constant { c } => check_finite("c", *c),
            Integrand::Identity | Integrand::Square => Ok(()),
        }
    }
}

/// A target, a proposal and an integrand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub target: Density,
    pub proposal: Density,
    pub integrand: Integrand,
}

impl Problem {
    pub fn new(target: Density, proposal: Density, integrand: Integrand) -> Self {
        Self {
            target,
            proposal,
            integrand,
        }
    }
}

/// One sampled point on the extended space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightedDraw {
    pub x: f64,
    /// Log noise; `0` when no channel is active.
    pub z: f64,
    pub log_w: f64,
    /// `log_w + z`.
    pub log_w_noisy: f64,
}

impl WeightedDraw {
    pub fn new(x: f64, z: f64, log_w: f64) -> Self {
        Self {
            x,
            z,
            log_w,
            log_w_noisy: log_w + z,
        }
    }
}

/// `log π(x) − log q(x)`.
///
/// Returns `-inf` when both densities vanish at `x`, and `SupportViolation`
/// when only the proposal does.
pub fn log_weight(target: &Density, proposal: &Density, x: f64) -> Result<f64> {
    let lq = proposal.log_pdf(x);
    let lp = target.log_pdf(x);
    if lq == f64::NEG_INFINITY {
        if lp > f64::NEG_INFINITY {
            return Err(Error::SupportViolation { x });
        }
        return Ok(f64::NEG_INFINITY);
    }
    Ok(lp - lq)
}

/// Checks that the proposal support contains the target support.
pub fn check_dominance(target: &Density, proposal: &Density) -> Result<()> {
    let (tlo, thi) = target.support();
    let (qlo, qhi) = proposal.support();
    if qlo <= tlo && thi <= qhi {
        Ok(())
    } else {
        Err(Error::SupportMismatch(format!(
            "proposal support [{qlo}, {qhi}] does not contain target support [{tlo}, {thi}]"
        )))
    }
}

/// `n` i.i.d. draws from `proposal` on the proposal stream of `seed`.
pub fn draw_batch(proposal: &Density, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(CounterStream::new(seed, StreamId::PROPOSAL).generate(n, |w| proposal.sample(w)))
}
