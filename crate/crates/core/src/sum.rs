//! Deterministic summation.
//!
//! Values are split into fixed-size chunks, each chunk is summed pairwise,
//! and the chunk sums are combined pairwise in index order. The parallel and
//! sequential entry points therefore return identical bits.

use rayon::prelude::*;

const BASE: usize = 8;

/// Elements per chunk in [`chunked_sum`].
pub const CHUNK: usize = 1024;

/// Recursive pairwise sum; blocks of at most eight are folded left to right.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BASE {
        return values.iter().fold(0.0, |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Chunked pairwise sum using the current rayon pool.
pub fn chunked_sum(values: &[f64]) -> f64 {
    let partial: Vec<f64> = values.par_chunks(CHUNK).map(pairwise_sum).collect();
    pairwise_sum(&partial)
}

/// Sequential twin of [`chunked_sum`].
pub fn chunked_sum_serial(values: &[f64]) -> f64 {
    let partial: Vec<f64> = values.chunks(CHUNK).map(pairwise_sum).collect();
    pairwise_sum(&partial)
}

/// Chunked sum of `map(v)` over `values`, without materializing the mapped vector.
pub fn chunked_map_sum<T, F>(values: &[T], map: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync,
{
    let partial: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mapped: Vec<f64> = chunk.iter().map(&map).collect();
            pairwise_sum(&mapped)
        })
        .collect();
    pairwise_sum(&partial)
}

/// Neumaier-compensated sum, used where the reference value must be as
/// accurate as possible rather than fast.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_inputs() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.5]), 1.5);
        assert_eq!(chunked_sum(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn exact_on_integers() {
        let v: Vec<f64> = (1..=100_000).map(|i| i as f64).collect();
        assert_eq!(chunked_sum(&v), 5_000_050_000.0);
    }

    #[test]
    fn compensated_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn map_sum_matches_materialized() {
        let v: Vec<f64> = (0..5000).map(|i| (i as f64).sin()).collect();
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        assert_eq!(chunked_map_sum(&v, |x| x * x), chunked_sum(&sq));
    }

    proptest! {
        #[test]
        fn parallel_equals_serial(v in proptest::collection::vec(-1e6f64..1e6, 0..20_000)) {
            let par = chunked_sum(&v);
            let ser = chunked_sum_serial(&v);
            prop_assert_eq!(par.to_bits(), ser.to_bits());
        }
    }
}
