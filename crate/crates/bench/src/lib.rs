//! Fixtures shared by the benchmarks.

use noisy_is::{Density, Integrand, MixtureComponent, NoiseChannel, Problem};

/// `N(0, 1)` target, `N(0, 2)` proposal, `f(x) = x²`.
pub fn canonical() -> Problem {
    Problem::new(
        Density::gaussian(0.0, 1.0).expect("valid density"),
        Density::gaussian(0.0, 2.0).expect("valid density"),
        Integrand::Square,
    )
}

/// Bimodal target under a wide Gaussian proposal, `f(x) = x`.
pub fn mixture() -> Problem {
    let target = Density::mixture(vec![
        MixtureComponent {
            weight: 0.5,
            mean: -1.0,
            variance: 1.0,
        },
        MixtureComponent {
            weight: 0.5,
            mean: 2.0,
            variance: 1.0,
        },
    ])
    .expect("valid density");
    Problem::new(
        target,
        Density::gaussian(0.5, 4.0).expect("valid density"),
        Integrand::Identity,
    )
}

pub fn lognormal(gamma: f64) -> NoiseChannel {
    NoiseChannel::lognormal(gamma).expect("valid channel")
}

pub const SIZES: [usize; 3] = [1_000, 10_000, 100_000];
