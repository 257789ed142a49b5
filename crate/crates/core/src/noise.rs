//! Mean-one multiplicative noise channels on the log-weights.
//!
//! A channel is a law `g` on `z` with `E_g[exp(Z)] = 1`. Multiplying an
//! importance weight by `exp(Z)` leaves the estimator unbiased and adds
//! `var_g[exp(Z)] · E_q[(f w)^2]` to its asymptotic variance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{CounterStream, DrawWords, StreamId};

const MEAN_ONE_TOL: f64 = 1e-12;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Parameters of a noise channel as written in configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelFamily {
    Identity,
    /// `Z ~ N(-γ²/2, γ²)`.
    Lognormal {
        gamma: f64,
    },
    /// `exp(Z) = a` with probability `p`, `b` otherwise.
    TwoPoint {
        a: f64,
        b: f64,
        p: f64,
    },
}

/// A validated noise channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelFamily", into = "ChannelFamily")]
pub struct NoiseChannel {
    family: ChannelFamily,
}

impl NoiseChannel {
    pub const IDENTITY: NoiseChannel = NoiseChannel {
        family: ChannelFamily::Identity,
    };

    pub fn lognormal(gamma: f64) -> Result<Self> {
        ChannelFamily::Lognormal { gamma }.try_into()
    }

    pub fn two_point(a: f64, b: f64, p: f64) -> Result<Self> {
        ChannelFamily::TwoPoint { a, b, p }.try_into()
    }

    pub fn family(&self) -> &ChannelFamily {
        &self.family
    }

    /// True when `Z ≡ 0`: the identity channel or a lognormal with `γ = 0`.
    pub fn is_degenerate(&self) -> bool {
        match self.family {
            ChannelFamily::Identity => true,
            ChannelFamily::Lognormal { gamma } => gamma == 0.0,
            ChannelFamily::TwoPoint { a, b, .. } => a == 1.0 && b == 1.0,
        }
    }

    /// Maps one counter block to a draw of `Z`.
    pub fn sample(&self, words: &DrawWords) -> f64 {
        match self.family {
            ChannelFamily::Identity => 0.0,
            ChannelFamily::Lognormal { gamma } => {
                if gamma == 0.0 {
                    0.0
                } else {
                    -0.5 * gamma * gamma + gamma * words.standard_normal(0)
                }
            }
            ChannelFamily::TwoPoint { a, b, p } => {
                if words.uniform(0) < p {
                    a.ln()
                } else {
                    b.ln()
                }
            }
        }
    }

    /// `log g(z)`. For the two-point law this is the log probability mass.
    pub fn log_density(&self, z: f64) -> Result<f64> {
        match self.family {
            ChannelFamily::Identity => Err(Error::NoDensity("identity channel has no density")),
            ChannelFamily::Lognormal { gamma } => {
                if gamma == 0.0 {
                    return Err(Error::NoDensity(
                        "lognormal channel with gamma = 0 has no density",
                    ));
                }
                let v = gamma * gamma;
                let d = z + 0.5 * v;
                Ok(-0.5 * (LN_2PI + v.ln()) - d * d / (2.0 * v))
            }
            ChannelFamily::TwoPoint { a, b, p } => {
                let (za, zb) = (a.ln(), b.ln());
                Ok(if z == za && z == zb {
                    0.0
                } else if z == za {
                    p.ln()
                } else if z == zb {
                    (1.0 - p).ln()
                } else {
                    f64::NEG_INFINITY
                })
            }
        }
    }

    /// `var_g[exp(Z)]`.
    pub fn var_exp_z(&self) -> f64 {
        match self.family {
            ChannelFamily::Identity => 0.0,
            ChannelFamily::Lognormal { gamma } => (gamma * gamma).exp_m1(),
            // p a² + (1-p) b² - 1 under the mean-one constraint, written so it
            // is non-negative and zero exactly when a = b.
            ChannelFamily::TwoPoint { a, b, p } => p * (1.0 - p) * (a - b) * (a - b),
        }
    }

    /// Short human-readable label without commas, for table output.
    pub fn label(&self) -> String {
        match self.family {
            ChannelFamily::Identity => "identity".to_string(),
            ChannelFamily::Lognormal { gamma } => format!("lognormal gamma={gamma}"),
            ChannelFamily::TwoPoint { a, b, p } => format!("two_point a={a} b={b} p={p}"),
        }
    }
}

impl Default for NoiseChannel {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl TryFrom<ChannelFamily> for NoiseChannel {
    type Error = Error;

    fn try_from(family: ChannelFamily) -> Result<Self> {
        match family {
            ChannelFamily::Identity => {}
            ChannelFamily::Lognormal { gamma } => {
                if !(gamma.is_finite() && gamma >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "lognormal gamma must be finite and >= 0, got {gamma}"
                    )));
                }
            }
            ChannelFamily::TwoPoint { a, b, p } => {
                if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "two_point atoms must be finite and > 0, got a = {a}, b = {b}"
                    )));
                }
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "two_point p must lie in (0, 1), got {p}"
                    )));
                }
                let mean = p * a + (1.0 - p) * b;
                if (mean - 1.0).abs() > MEAN_ONE_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "two_point must satisfy p*a + (1-p)*b = 1, got {mean}"
                    )));
                }
            }
        }
        Ok(NoiseChannel { family })
    }
}

impl From<NoiseChannel> for ChannelFamily {
    fn from(c: NoiseChannel) -> Self {
        c.family
    }
}

/// `n` i.i.d. draws of `Z` on the noise stream of `seed`. Degenerate
/// channels return zeros without touching the generator.
pub fn sample_noise(channel: &NoiseChannel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if channel.is_degenerate() {
        return Ok(vec![0.0; n]);
    }
    Ok(CounterStream::new(seed, StreamId::NOISE).generate(n, |w| channel.sample(w)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_and_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let s2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, s2)
    }

    #[test]
    fn identity_is_zero() {
        assert_eq!(
            sample_noise(&NoiseChannel::IDENTITY, 4, 9).unwrap(),
            vec![0.0; 4]
        );
        assert_eq!(
            sample_noise(&NoiseChannel::lognormal(0.0).unwrap(), 3, 9).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn lognormal_mean_one_by_simulation() {
        let ch = NoiseChannel::lognormal(0.5).unwrap();
        let e: Vec<f64> = sample_noise(&ch, 1_000_000, 3)
            .unwrap()
            .iter()
            .map(|z| z.exp())
            .collect();
        let (m, s2) = mean_and_var(&e);
        assert!((m - 1.0).abs() < 5.0 * (s2 / 1e6).sqrt());
        assert!((s2 / ch.var_exp_z() - 1.0).abs() < 0.05);
    }

    #[test]
    fn two_point_mean_one_by_simulation() {
        let p: f64 = 2.0 / 3.0;
        // Arithmetic check of the constraint before the run.
        assert!((p * 0.5 + (1.0 - p) * 2.0 - 1.0).abs() < 1e-15);
        let ch = NoiseChannel::two_point(0.5, 2.0, p).unwrap();
        let e: Vec<f64> = sample_noise(&ch, 1_000_000, 4)
            .unwrap()
            .iter()
            .map(|z| z.exp())
            .collect();
        let (m, s2) = mean_and_var(&e);
        assert!((m - 1.0).abs() < 5.0 * (s2 / 1e6).sqrt());
        assert!((s2 / ch.var_exp_z() - 1.0).abs() < 0.05);
    }

    #[test]
    fn log_density_values() {
        let ch = NoiseChannel::lognormal(1.0).unwrap();
        let v = ch.log_density(-0.5).unwrap();
        assert!((v - (-0.918_938_533_204_672_8)).abs() < 1e-15);

        let tp = NoiseChannel::two_point(0.5, 2.0, 2.0 / 3.0).unwrap();
        let at_b = tp.log_density(2f64.ln()).unwrap();
        assert!((at_b - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(tp.log_density(0.0).unwrap(), f64::NEG_INFINITY);

        assert!(matches!(
            NoiseChannel::IDENTITY.log_density(0.0),
            Err(Error::NoDensity(_))
        ));
        assert!(matches!(
            NoiseChannel::lognormal(0.0).unwrap().log_density(0.0),
            Err(Error::NoDensity(_))
        ));
    }

    #[test]
    fn var_exp_z_values() {
        assert_eq!(NoiseChannel::lognormal(0.0).unwrap().var_exp_z(), 0.0);
        assert_eq!(NoiseChannel::IDENTITY.var_exp_z(), 0.0);
        let v = NoiseChannel::lognormal(0.5).unwrap().var_exp_z();
        assert!((v - 0.284_025_416_687_741_5).abs() < 1e-15);
        let tp = NoiseChannel::two_point(0.5, 2.0, 2.0 / 3.0)
            .unwrap()
            .var_exp_z();
        assert!((tp - 0.5).abs() < 1e-15);
        assert_eq!(
            NoiseChannel::two_point(1.0, 1.0, 0.3).unwrap().var_exp_z(),
            0.0
        );
    }

    #[test]
    fn var_exp_z_strictly_increasing_in_gamma() {
        let vals: Vec<f64> = (0..=20)
            .map(|k| NoiseChannel::lognormal(k as f64 * 0.1).unwrap().var_exp_z())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn validation() {
        assert!(NoiseChannel::lognormal(-0.1).is_err());
        assert!(NoiseChannel::two_point(0.5, 2.0, 0.5).is_err());
        assert!(NoiseChannel::two_point(0.5, 2.0, 1.0).is_err());
        assert!(NoiseChannel::two_point(-0.5, 2.0, 0.5).is_err());
    }

    #[test]
    fn noise_stream_is_independent_of_proposal_stream() {
        let ch = NoiseChannel::lognormal(1.0).unwrap();
        let z = sample_noise(&ch, 8, 7).unwrap();
        let x =
            crate::model::draw_batch(&crate::model::Density::gaussian(-0.5, 1.0).unwrap(), 8, 7)
                .unwrap();
        assert_ne!(z, x);
    }
}
