//! Reduction helpers with a fixed evaluation order, so that sums are
//! bit-reproducible regardless of how the inputs were produced.

use num_complex::Complex64;

const PAIRWISE_BLOCK: usize = 16;

/// Pairwise (cascade) summation; the split points depend only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= PAIRWISE_BLOCK {
        return a.iter().zip(b).map(|(x, y)| x * y).sum();
    }
    let mid = a.len() / 2;
    pairwise_dot(&a[..mid], &b[..mid]) + pairwise_dot(&a[mid..], &b[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Number of jackknife blocks used for every ratio estimator.
pub const JACKKNIFE_BLOCKS: usize = 20;

/// Contiguous block boundaries splitting `n` items into at most `blocks`
/// nearly equal parts.
fn block_ranges(n: usize, blocks: usize) -> Vec<std::ops::Range<usize>> {
    let b = blocks.min(n).max(1);
    (0..b).map(|i| (i * n / b)..((i + 1) * n / b)).collect()
}

/// Self-normalised weighted mean `Σ wᵢ xᵢ / Σ wᵢ` with a delete-one-block
/// jackknife standard error.
///
/// Returns `(estimate, stderr)`. The complex stderr is
/// `√(var(re) + var(im))`.
pub fn weighted_mean_jackknife(values: &[Complex64], weights: &[f64]) -> (Complex64, f64) {
    let (estimate, leave_out) = weighted_mean_leave_out(values, weights);
    let re: Vec<f64> = leave_out.iter().map(|v| v.re).collect();
    let im: Vec<f64> = leave_out.iter().map(|v| v.im).collect();
    let (sr, si) = (jackknife_stderr(&re), jackknife_stderr(&im));
    (estimate, (sr * sr + si * si).sqrt())
}

/// Self-normalised weighted mean together with its delete-one-block
/// replicates over [`JACKKNIFE_BLOCKS`] contiguous blocks.
pub fn weighted_mean_leave_out(values: &[Complex64], weights: &[f64]) -> (Complex64, Vec<Complex64>) {
    debug_assert_eq!(values.len(), weights.len());
    let weighted: Vec<Complex64> = values.iter().zip(weights).map(|(v, w)| v * w).collect();
    let ranges = block_ranges(values.len(), JACKKNIFE_BLOCKS);
    let block_num: Vec<Complex64> = ranges
        .iter()
        .map(|r| pairwise_sum_complex(&weighted[r.clone()]))
        .collect();
    let block_den: Vec<f64> = ranges.iter().map(|r| pairwise_sum(&weights[r.clone()])).collect();
    let num = pairwise_sum_complex(&block_num);
    let den = pairwise_sum(&block_den);
    let estimate = num / den;
    if ranges.len() < 2 {
        return (estimate, Vec::new());
    }
    let leave_out = block_num
        .iter()
        .zip(&block_den)
        .map(|(n_i, d_i)| (num - n_i) / (den - d_i))
        .collect();
    (estimate, leave_out)
}

/// Jackknife standard error of a statistic from its delete-one-block
/// replicates; zero with fewer than two replicates.
pub fn jackknife_stderr(leave_out: &[f64]) -> f64 {
    let b = leave_out.len();
    if b < 2 {
        return 0.0;
    }
    let mean = pairwise_sum(leave_out) / b as f64;
    let spread: Vec<f64> = leave_out.iter().map(|x| (x - mean) * (x - mean)).collect();
    ((b - 1) as f64 / b as f64 * pairwise_sum(&spread)).sqrt()
}

/// Unweighted mean with jackknife stderr over the same blocks.
pub fn mean_jackknife(values: &[f64]) -> (f64, f64) {
    let c: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let w = vec![1.0; values.len()];
    let (m, s) = weighted_mean_jackknife(&c, &w);
    (m.re, s)
}

/// Effective sample size `(Σw)² / Σw²`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s = pairwise_sum(weights);
    let s2 = pairwise_dot(weights, weights);
    if s2 == 0.0 {
        0.0
    } else {
        s * s / s2
    }
}

/// Converts log-weights to weights after subtracting the maximum.
pub fn normalized_weights(log_weights: &[f64]) -> Vec<f64> {
    let max = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    log_weights.iter().map(|l| (l - max).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pairwise_matches_naive_on_small_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
        assert_eq!(pairwise_dot(&xs, &vec![1.0; 1000]), 499500.0);
    }

    #[test]
    fn jackknife_of_iid_mean_matches_naive_stderr() {
        // deterministic pseudo-random sequence
        let xs: Vec<f64> = (0..20000u64)
            .map(|i| {
                // splitmix64 finaliser
                let mut z = i.wrapping_add(1).wrapping_mul(0x9e3779b97f4a7c15);
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                (z ^ (z >> 31)) as f64 / u64::MAX as f64
            })
            .collect();
        let (m, se) = mean_jackknife(&xs);
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let naive = (var / xs.len() as f64).sqrt();
        assert!((se / naive - 1.0).abs() < 0.5, "{se} vs {naive}");
    }

    #[test]
    fn ess_of_equal_weights_is_n() {
        assert!((effective_sample_size(&[2.0; 50]) - 50.0).abs() < 1e-12);
        assert!((effective_sample_size(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn pairwise_sum_close_to_naive(xs in proptest::collection::vec(-1e3f64..1e3, 0..300)) {
            let naive: f64 = xs.iter().sum();
            prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-9 * (1.0 + xs.iter().map(|x| x.abs()).sum::<f64>()));
        }

        #[test]
        fn constant_values_have_zero_stderr(v in -5.0f64..5.0, ws in proptest::collection::vec(0.1f64..3.0, 40..200)) {
            let vals = vec![Complex64::new(v, -v); ws.len()];
            let (m, se) = weighted_mean_jackknife(&vals, &ws);
            prop_assert!((m.re - v).abs() < 1e-12 && (m.im + v).abs() < 1e-12);
            prop_assert!(se < 1e-12);
        }
    }
}
