//! Monte Carlo checks of the sampler and estimator invariants at fixed seeds.

use noisy_is::study::mean_and_var;
use noisy_is::{
    draw_batch, estimate_is, estimate_noisy_is, estimate_snis, oracle_discrete_snis, oracle_mean,
    sample_extended, sir_resample, Density, Integrand, MixtureComponent, NoiseChannel, Problem,
    WeightedDraw,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn g(m: f64, v: f64) -> Density {
    Density::gaussian(m, v).unwrap()
}

fn bundled_problems() -> Vec<(&'static str, Problem)> {
    let mix = Density::mixture(vec![
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
    .unwrap();
    vec![
        (
            "canonical",
            Problem::new(g(0.0, 1.0), g(0.0, 2.0), Integrand::Square),
        ),
        (
            "shifted mean",
            Problem::new(g(1.0, 1.0), g(0.0, 2.0), Integrand::Identity),
        ),
        (
            "mixture target",
            Problem::new(mix, g(0.5, 4.0), Integrand::Identity),
        ),
        (
            "uniform pair",
            Problem::new(
                Density::uniform(0.0, 1.0).unwrap(),
                Density::uniform(0.0, 2.0).unwrap(),
                Integrand::Square,
            ),
        ),
        (
            "indicator",
            Problem::new(
                Density::uniform(0.0, 1.0).unwrap(),
                g(0.5, 1.0),
                Integrand::Indicator { threshold: 0.7 },
            ),
        ),
    ]
}

#[test]
fn sampler_moments_match_analytic() {
    let n = 100_000;
    let families = [
        g(5.0, 1.0),
        g(-2.0, 0.3),
        Density::uniform(-1.0, 3.0).unwrap(),
        Density::mixture(vec![
            MixtureComponent {
                weight: 0.3,
                mean: -1.0,
                variance: 0.5,
            },
            MixtureComponent {
                weight: 0.7,
                mean: 2.0,
                variance: 1.5,
            },
        ])
        .unwrap(),
    ];
    for (k, d) in families.iter().enumerate() {
        let x = draw_batch(d, n, 100 + k as u64).unwrap();
        let (m, v) = mean_and_var(&x);
        let se_mean = (d.variance() / n as f64).sqrt();
        assert!((m - d.mean()).abs() < 5.0 * se_mean, "{d:?}: mean {m}");
        let m4 = x.iter().map(|xi| (xi - m).powi(4)).sum::<f64>() / n as f64;
        let se_var = ((m4 - v * v) / n as f64).sqrt();
        assert!((v - d.variance()).abs() < 5.0 * se_var, "{d:?}: var {v}");
    }
}

#[test]
fn mean_importance_weight_is_one() {
    for (name, p) in bundled_problems() {
        let means: Vec<f64> = (0..100)
            .map(|r| {
                let d = sample_extended(&p, &NoiseChannel::IDENTITY, 10_000, 500 + r).unwrap();
                d.iter().map(|w| w.log_w.exp()).sum::<f64>() / d.len() as f64
            })
            .collect();
        let (m, v) = mean_and_var(&means);
        let se = (v / means.len() as f64).sqrt();
        assert!((m - 1.0).abs() < 4.0 * se, "{name}: {m} (se {se})");
    }
}

#[test]
fn unbiased_for_every_bundled_problem() {
    for (name, p) in bundled_problems() {
        let truth = oracle_mean(&p.target, &p.integrand).unwrap();
        for gamma in [0.0, 0.25, 0.5] {
            let ch = NoiseChannel::lognormal(gamma).unwrap();
            let est: Vec<f64> = (0..200)
                .map(|r| {
                    estimate_noisy_is(&p, &ch, 10_000, 9_000 + r, 0.05)
                        .unwrap()
                        .estimate
                })
                .collect();
            let (m, v) = mean_and_var(&est);
            let se = (v / 200.0).sqrt();
            assert!(
                (m - truth).abs() < 4.0 * se,
                "{name}, gamma {gamma}: {m} vs {truth} (se {se})"
            );
        }
    }
}

#[test]
fn ess_degrades_with_noise() {
    let p = bundled_problems().remove(0).1;
    let mut previous = f64::INFINITY;
    for gamma in [0.0, 0.25, 0.5, 1.0] {
        let ch = NoiseChannel::lognormal(gamma).unwrap();
        let ess: Vec<f64> = (0..50)
            .map(|r| {
                estimate_noisy_is(&p, &ch, 10_000, 40 + r, 0.05)
                    .unwrap()
                    .ess
            })
            .collect();
        let mean = ess.iter().sum::<f64>() / ess.len() as f64;
        assert!(mean <= previous, "gamma {gamma}: {mean} > {previous}");
        assert!(mean > 0.0 && mean <= 10_000.0);
        previous = mean;
    }
}

#[test]
fn ess_is_n_without_mismatch() {
    let n01 = g(0.0, 1.0);
    let p = Problem::new(n01.clone(), n01, Integrand::Identity);
    let r = estimate_is(&p, 4321, 8, 0.05).unwrap();
    assert_eq!(r.ess, 4321.0);
    let r = estimate_snis(&p, &NoiseChannel::IDENTITY, 4321, 8, 0.05).unwrap();
    assert_eq!(r.ess, 4321.0);
}

fn chi_square_p(counts: &[usize], probs: &[f64]) -> f64 {
    let m: usize = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * m as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn sir_frequencies_follow_weights() {
    let cases: [&[f64]; 4] = [
        &[1.0, 2.0, 7.0],
        &[1.0, 1.0, 1.0],
        &[0.5, 3.0, 1.0, 0.25, 2.0],
        &[5.0, 1.0],
    ];
    for (k, weights) in cases.iter().enumerate() {
        let draws: Vec<WeightedDraw> = weights
            .iter()
            .enumerate()
            .map(|(i, w)| WeightedDraw::new(i as f64, 0.0, w.ln()))
            .collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let m = 1_000_000;
        let out = sir_resample(&draws, m, 77 + k as u64).unwrap();
        let mut counts = vec![0usize; weights.len()];
        for x in out {
            counts[x as usize] += 1;
        }
        for (c, p) in counts.iter().zip(&probs) {
            let freq = *c as f64 / m as f64;
            let se = (p * (1.0 - p) / m as f64).sqrt();
            assert!((freq - p).abs() < 5.0 * se, "{weights:?}: {freq} vs {p}");
        }
        let pval = chi_square_p(&counts, &probs);
        assert!(pval > 0.001, "{weights:?}: p = {pval}");
    }
}

#[test]
fn sir_mean_matches_discrete_oracle() {
    // Resampled mean converges to the self-normalized average of the atoms.
    let atoms = [(-1.0, 0.2), (0.5, -1.0), (2.0, 0.7), (3.0, -3.0)];
    let draws: Vec<WeightedDraw> = atoms
        .iter()
        .map(|&(x, l)| WeightedDraw::new(x, 0.0, l))
        .collect();
    let truth = oracle_discrete_snis(&atoms, &Integrand::Identity).unwrap();
    let out = sir_resample(&draws, 1_000_000, 3).unwrap();
    let (m, v) = mean_and_var(&out);
    assert!((m - truth).abs() < 5.0 * (v / 1e6).sqrt());
}

#[test]
fn noisy_snis_is_consistent() {
    let p = Problem::new(g(1.0, 1.0), g(0.0, 2.0), Integrand::Identity);
    let ch = NoiseChannel::lognormal(0.5).unwrap();
    let bias = |n: usize| {
        let est: Vec<f64> = (0..100)
            .map(|r| estimate_snis(&p, &ch, n, 3_000 + r, 0.05).unwrap().estimate)
            .collect();
        (mean_and_var(&est).0 - 1.0).abs()
    };
    let (small, large) = (bias(1_000), bias(30_000));
    assert!(large < small, "{large} !< {small}");
}
