//! Importance sampling with multiplicative noise on the weights.
//!
//! Draws `X ~ q` and `Z ~ g` on independent counter-based streams, weights
//! them by `w(x) exp(z)` with `w = π / q`, and estimates `E_π[f]`. The
//! [`oracle`] module computes every moment the variance law
//! `σ̄² = σ² + var_g[exp Z] E_q[(f w)²]` needs, and [`study`] measures
//! replicate means and variances against those predictions.

pub mod error;
pub mod estimator;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod study;
pub mod sum;

pub use error::{Error, Result};
pub use estimator::{
    estimate_is, estimate_noisy_is, estimate_snis, sample_extended, sir_resample, snis_report,
    variance_budget, EstimateReport, EstimatorKind, VarianceBudget,
};
pub use model::{
    check_dominance, draw_batch, log_weight, Density, DensityFamily, Integrand, MixtureComponent,
    Problem, WeightedDraw,
};
pub use noise::{sample_noise, ChannelFamily, NoiseChannel};
pub use oracle::{
    oracle_channel_mean, oracle_discrete_snis, oracle_mean, oracle_second_moment_fw, oracle_sigma2,
};
pub use quadrature::{integrate, Quadrature, QuadratureSpec};
pub use study::{
    run_study, sweep_gamma, variance_law_fit, StudyCell, StudyResult, StudySpec, SweepRow,
};
