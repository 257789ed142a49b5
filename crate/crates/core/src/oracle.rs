//! Ground-truth moments by deterministic quadrature, and exhaustive
//! references for finite weighted sets.
//!
//! Gaussian pieces are integrated over `mean ± 12 sd`; uniform pieces over
//! their exact support. The squared-weight integrand `f² π²/q` is itself a
//! Gaussian envelope per (target, proposal) component pair and gets its own
//! `± 12 sd` box.

use crate::error::{Error, Result};
use crate::model::{check_dominance, Density, Integrand};
use crate::noise::{ChannelFamily, NoiseChannel};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::sum::compensated_sum;

/// Standard deviations covered on each side of a Gaussian piece.
pub const DEFAULT_WIDTH_SD: f64 = 12.0;

/// Bounds and breakpoints for one oracle integral.
#[derive(Debug, Clone)]
struct Domain {
    lo: f64,
    hi: f64,
    breaks: Vec<f64>,
}

impl Domain {
    fn empty() -> Self {
        Domain {
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
            breaks: Vec::new(),
        }
    }

    fn cover_piece(&mut self, center: f64, sd: f64, width: f64) {
        self.lo = self.lo.min(center - width * sd);
        self.hi = self.hi.max(center + width * sd);
        for k in [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0] {
            self.breaks.push(center + k * sd);
        }
    }

    fn cover_density(&mut self, d: &Density, width: f64) {
        let (slo, shi) = d.support();
        if slo.is_finite() {
            self.lo = self.lo.min(slo);
            self.hi = self.hi.max(shi);
            self.breaks.extend([slo, shi]);
        } else {
            for (c, sd) in d.pieces() {
                self.cover_piece(c, sd, width);
            }
        }
    }

    /// Clips to the closed support of `d`.
    fn clip_to(&mut self, d: &Density) {
        let (slo, shi) = d.support();
        self.lo = self.lo.max(slo);
        self.hi = self.hi.min(shi);
    }

    fn spec(&self) -> QuadratureSpec {
        QuadratureSpec::new(self.lo, self.hi)
    }
}

/// Integration options for the oracle routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Half-width of each Gaussian box, in standard deviations.
    pub width_sd: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            width_sd: DEFAULT_WIDTH_SD,
            rel_tol: QuadratureSpec::DEFAULT_REL_TOL,
            abs_tol: QuadratureSpec::DEFAULT_ABS_TOL,
            max_subdivisions: QuadratureSpec::DEFAULT_MAX_SUBDIVISIONS,
        }
    }
}

impl OracleOptions {
    fn quadrature(&self, domain: &Domain) -> QuadratureSpec {
        domain
            .spec()
            .with_rel_tol(self.rel_tol)
            .with_abs_tol(self.abs_tol)
            .with_max_subdivisions(self.max_subdivisions)
    }
}

fn mean_domain(target: &Density, f: &Integrand, width: f64) -> Domain {
    let mut d = Domain::empty();
    d.cover_density(target, width);
    d.breaks.extend(f.breakpoints());
    d
}

/// Domain of `f² π² / q` and of `(f w − μ)² q`.
fn weight_domain(target: &Density, proposal: &Density, f: &Integrand, width: f64) -> Domain {
    let mut d = Domain::empty();
    d.cover_density(target, width);
    if target.support().0.is_finite() {
        // Compact target: the squared-weight term lives on the target support.
        d.breaks.extend(proposal.pieces().iter().map(|p| p.0));
    } else {
        for (a, sa) in target.pieces() {
            let va = sa * sa;
            for (b, sb) in proposal.pieces() {
                let vb = sb * sb;
                let precision = 2.0 / va - 1.0 / vb;
                if precision > 0.0 {
                    let center = (2.0 * a / va - b / vb) / precision;
                    d.cover_piece(center, precision.recip().sqrt(), width);
                }
            }
        }
    }
    d.breaks.extend(f.breakpoints());
    d
}

/// Rejects problems whose `E_q[(f w)²]` is infinite, before integrating.
pub fn check_integrability(target: &Density, proposal: &Density, f: &Integrand) -> Result<()> {
    check_dominance(target, proposal)?;
    if f.is_zero() {
        return Ok(());
    }
    if let (Some(vt), Some(vq)) = (target.tail_variance(), proposal.tail_variance()) {
        if vq <= 0.5 * vt {
            return Err(Error::OracleDivergence(format!(
                "E_q[(f w)^2] is infinite: proposal tail variance {vq} must exceed half the target tail variance {vt}"
            )));
        }
    }
    Ok(())
}

/// `E_π[f(X)]`.
pub fn oracle_mean(target: &Density, f: &Integrand) -> Result<f64> {
    oracle_mean_with(target, f, &OracleOptions::default())
}

pub fn oracle_mean_with(target: &Density, f: &Integrand, opts: &OracleOptions) -> Result<f64> {
    f.validate()?;
    let dom = mean_domain(target, f, opts.width_sd);
    let integrand = |x: f64| {
        let lp = target.log_pdf(x);
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            f.eval(x) * lp.exp()
        }
    };
    Ok(integrate(integrand, &opts.quadrature(&dom), &dom.breaks)?.value)
}

/// `E_q[(f(X) w(X))²] = ∫ f² π² / q`.
pub fn oracle_second_moment_fw(target: &Density, proposal: &Density, f: &Integrand) -> Result<f64> {
    oracle_second_moment_fw_with(target, proposal, f, &OracleOptions::default())
}

pub fn oracle_second_moment_fw_with(
    target: &Density,
    proposal: &Density,
    f: &Integrand,
    opts: &OracleOptions,
) -> Result<f64> {
    f.validate()?;
    check_integrability(target, proposal, f)?;
    let mut dom = weight_domain(target, proposal, f, opts.width_sd);
    dom.clip_to(target);
    let integrand = |x: f64| {
        let lp = target.log_pdf(x);
        if lp == f64::NEG_INFINITY {
            return 0.0;
        }
        let fx = f.eval(x);
        fx * fx * (2.0 * lp - proposal.log_pdf(x)).exp()
    };
    Ok(integrate(integrand, &opts.quadrature(&dom), &dom.breaks)?.value)
}

/// `σ²(f) = var_q[f(X) w(X)]`, integrated in centered form `∫ (f w − μ)² q`
/// with `μ = E_π[f]`.
pub fn oracle_sigma2(target: &Density, proposal: &Density, f: &Integrand) -> Result<f64> {
    oracle_sigma2_with(target, proposal, f, &OracleOptions::default())
}

pub fn oracle_sigma2_with(
    target: &Density,
    proposal: &Density,
    f: &Integrand,
    opts: &OracleOptions,
) -> Result<f64> {
    f.validate()?;
    check_integrability(target, proposal, f)?;
    let mu = oracle_mean_with(target, f, opts)?;
    let mut dom = weight_domain(target, proposal, f, opts.width_sd);
    dom.cover_density(proposal, opts.width_sd);
    dom.clip_to(proposal);
    let integrand = |x: f64| {
        let lq = proposal.log_pdf(x);
        if lq == f64::NEG_INFINITY {
            return 0.0;
        }
        let lp = target.log_pdf(x);
        let fw = if lp == f64::NEG_INFINITY {
            0.0
        } else {
            f.eval(x) * (lp - lq).exp()
        };
        let d = fw - mu;
        d * d * lq.exp()
    };
    Ok(integrate(integrand, &opts.quadrature(&dom), &dom.breaks)?.value)
}

/// `E_g[exp(Z)]`, by quadrature for the lognormal family and by direct
/// summation for the discrete ones.
pub fn oracle_channel_mean(channel: &NoiseChannel) -> Result<f64> {
    match *channel.family() {
        ChannelFamily::Identity => Ok(1.0),
        ChannelFamily::Lognormal { gamma: 0.0 } => Ok(1.0),
        ChannelFamily::Lognormal { gamma } => {
            let loc = -0.5 * gamma * gamma;
            // exp(z) g(z) is N(+γ²/2, γ²); cover both centers.
            let width = DEFAULT_WIDTH_SD + gamma;
            let spec = QuadratureSpec::new(loc - width * gamma, loc + width * gamma);
            let breaks: Vec<f64> = [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0]
                .iter()
                .map(|k| loc + k * gamma)
                .collect();
            let integrand =
                |z: f64| (z + channel.log_density(z).unwrap_or(f64::NEG_INFINITY)).exp();
            Ok(integrate(integrand, &spec, &breaks)?.value)
        }
        ChannelFamily::TwoPoint { a, b, p } => Ok(compensated_sum([p * a, (1.0 - p) * b])),
    }
}

/// `Σ f(x_i) softmax(log_w)_i` over a finite weighted set, with compensated
/// summation.
pub fn oracle_discrete_snis(atoms: &[(f64, f64)], f: &Integrand) -> Result<f64> {
    if atoms.is_empty() {
        return Err(Error::DegenerateWeights("no atoms"));
    }
    let m = atoms.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::DegenerateWeights("all log-weights are -inf"));
    }
    if !m.is_finite() {
        return Err(Error::InvalidParameter(
            "log-weights must not be +inf or NaN".into(),
        ));
    }
    let u: Vec<f64> = atoms.iter().map(|a| (a.1 - m).exp()).collect();
    let total = compensated_sum(u.iter().copied());
    let weighted = compensated_sum(atoms.iter().zip(&u).map(|(a, w)| f.eval(a.0) * w));
    Ok(weighted / total)
}
