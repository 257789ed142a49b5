//! Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Integration bounds and the stopping contract.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub lo: f64,
    pub hi: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub const DEFAULT_REL_TOL: f64 = 1e-10;
    pub const DEFAULT_ABS_TOL: f64 = 1e-13;
    pub const DEFAULT_MAX_SUBDIVISIONS: usize = 1 << 16;

    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            rel_tol: Self::DEFAULT_REL_TOL,
            abs_tol: Self::DEFAULT_ABS_TOL,
            max_subdivisions: Self::DEFAULT_MAX_SUBDIVISIONS,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_max_subdivisions(mut self, max: usize) -> Self {
        self.max_subdivisions = max;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0) || self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "invalid quadrature tolerances".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a successful integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[spec.lo, spec.hi]`, starting from the partition
/// induced by `breakpoints` (points outside the interval are ignored).
///
/// Fails with `OracleDivergence` when the error estimate does not reach
/// `max(abs_tol, rel_tol * |value|)` within `max_subdivisions` segments, or
/// when `f` produces a non-finite value.
pub fn integrate<F>(f: F, spec: &QuadratureSpec, breakpoints: &[f64]) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    spec.validate()?;
    let mut points: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > spec.lo && *p < spec.hi)
        .collect();
    points.push(spec.lo);
    points.push(spec.hi);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut heap = BinaryHeap::new();
    for w in points.windows(2) {
        heap.push(gauss_kronrod(&f, w[0], w[1]));
    }
    let (mut value, mut error) = totals(&heap);

    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::OracleDivergence(
                "integrand is not finite on the integration domain".into(),
            ));
        }
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            // Running totals drift; confirm on an exact recount.
            let (v, e) = totals(&heap);
            if e <= spec.abs_tol.max(spec.rel_tol * v.abs()) {
                return Ok(Quadrature {
                    value: v,
                    error: e,
                    subdivisions: heap.len(),
                });
            }
            (value, error) = (v, e);
            continue;
        }
        if heap.len() >= spec.max_subdivisions {
            return Err(Error::OracleDivergence(format!(
                "quadrature did not converge within {} subdivisions (value {value:e}, error {error:e})",
                spec.max_subdivisions
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::OracleDivergence(
                "quadrature segment collapsed below floating-point resolution".into(),
            ));
        }
        let left = gauss_kronrod(&f, worst.a, mid);
        let right = gauss_kronrod(&f, mid, worst.b);
        value += (left.value + right.value) - worst.value;
        error += (left.error + right.error) - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    // Sum in position order so the total does not depend on heap layout.
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = crate::sum::compensated_sum(segs.iter().map(|s| s.value));
    let error = segs.iter().map(|s| s.error).sum();
    (value, error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let q = integrate(
            |x| 3.0 * x * x - x + 2.0,
            &QuadratureSpec::new(0.0, 2.0),
            &[],
        )
        .unwrap();
        assert!((q.value - (8.0 - 2.0 + 4.0)).abs() < 1e-13);
        assert_eq!(q.subdivisions, 1);
    }

    #[test]
    fn gaussian_integral() {
        let f = |x: f64| (-0.5 * x * x).exp();
        let q = integrate(f, &QuadratureSpec::new(-12.0, 12.0), &[0.0]).unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt();
        assert!((q.value / exact - 1.0).abs() < 1e-12);
        assert!(q.error <= 1e-10 * q.value.abs());
    }

    #[test]
    fn discontinuity_with_breakpoint() {
        let f = |x: f64| if x > 0.3 { 1.0 } else { 0.0 };
        let q = integrate(f, &QuadratureSpec::new(0.0, 1.0), &[0.3]).unwrap();
        assert!((q.value - 0.7).abs() < 1e-14);
    }

    #[test]
    fn discontinuity_without_breakpoint_still_converges() {
        let f = |x: f64| if x > 0.3 { 1.0 } else { 0.0 };
        let q = integrate(f, &QuadratureSpec::new(0.0, 1.0).with_abs_tol(1e-12), &[]).unwrap();
        assert!((q.value - 0.7).abs() < 1e-10);
    }

    #[test]
    fn singular_integrand_diverges() {
        let f = |x: f64| 1.0 / x;
        let spec = QuadratureSpec::new(0.0, 1.0).with_max_subdivisions(200);
        assert!(matches!(
            integrate(f, &spec, &[]),
            Err(Error::OracleDivergence(_))
        ));
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(matches!(
            integrate(|x| x, &QuadratureSpec::new(1.0, 0.0), &[]),
            Err(Error::InvalidParameter(_))
        ));
    }
}
