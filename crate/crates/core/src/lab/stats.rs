//! Aggregation helpers for Monte Carlo reports.
//!
//! Sums are pairwise trees in fixed index order, so results are independent
//! of the worker count and reruns are byte-identical.

use crate::error::{Error, Result};
use crate::hilbert::HSTensor;

/// Pairwise (tree) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Quantile by linear interpolation on a pre-sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Median and upper quantiles (50/90/99%) of an unsorted sample.
pub fn quantiles_50_90_99(values: &[f64]) -> [f64; 3] {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    [
        quantile(&sorted, 0.50),
        quantile(&sorted, 0.90),
        quantile(&sorted, 0.99),
    ]
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < xs.len() && j < ys.len() {
        let (x, y) = (xs[i], ys[j]);
        if x <= y {
            while i < xs.len() && xs[i] == x {
                i += 1;
            }
        }
        if y <= x {
            while j < ys.len() && ys[j] == y {
                j += 1;
            }
        }
        let fa = i as f64 / xs.len() as f64;
        let fb = j as f64 / ys.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Least-squares slope of `log(error)` against `log(1/n)`.
pub fn estimate_rate(levels: &[usize], errors: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(n, e)| ((1.0 / *n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateRateInput {
            needed: 3,
            got: pts.len(),
        });
    }
    Ok(slope(&pts))
}

/// Slope over however many levels are available (>= 2); used for the
/// cumulative per-level column.
pub fn partial_rate(levels: &[usize], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0 && e.is_finite())
        .map(|(n, e)| ((1.0 / *n as f64).ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    slope(&pts)
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx = pts.iter().map(|p| p.0).sum::<f64>();
    let sy = pts.iter().map(|p| p.1).sum::<f64>();
    let sxx = pts.iter().map(|p| p.0 * p.0).sum::<f64>();
    let sxy = pts.iter().map(|p| p.0 * p.1).sum::<f64>();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Entrywise mean and standard error of a family of tensors.
pub fn tensor_mean_se(tensors: &[HSTensor]) -> (HSTensor, HSTensor) {
    assert!(!tensors.is_empty());
    let d = tensors[0].dim();
    let mut mean = HSTensor::zeros(d);
    let mut se = HSTensor::zeros(d);
    let mut buf = Vec::with_capacity(tensors.len());
    for i in 0..d {
        for j in 0..d {
            buf.clear();
            buf.extend(tensors.iter().map(|t| t.entry(i, j)));
            let (m, s) = mean_se(&buf);
            mean.set_entry(i, j, m);
            se.set_entry(i, j, s);
        }
    }
    (mean, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert!((pairwise_sum(&v) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn exact_power_law_recovers_slope_one() {
        let levels = [8usize, 16, 32, 64];
        let errors: Vec<f64> = levels.iter().map(|n| 3.0 / *n as f64).collect();
        let rate = estimate_rate(&levels, &errors).unwrap();
        assert!((rate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn half_power_law_recovers_half() {
        let levels = [8usize, 16, 32, 64];
        let errors: Vec<f64> = levels.iter().map(|n| (*n as f64).powf(-0.5)).collect();
        let rate = estimate_rate(&levels, &errors).unwrap();
        assert!((rate - 0.5).abs() < 1e-9);
    }

    #[test]
    fn noisy_power_law_recovered_within_interval() {
        // synthetic regression oracle: multiplicative noise around n^-0.7
        let levels = [4usize, 8, 16, 32, 64, 128];
        let noise = [1.05, 0.93, 1.08, 0.97, 1.02, 0.96];
        let errors: Vec<f64> = levels
            .iter()
            .zip(noise)
            .map(|(n, eps)| (*n as f64).powf(-0.7) * eps)
            .collect();
        let rate = estimate_rate(&levels, &errors).unwrap();
        assert!((rate - 0.7).abs() < 0.1, "rate {rate}");
    }

    #[test]
    fn degenerate_rate_inputs_error() {
        assert!(estimate_rate(&[8, 16, 32], &[0.0, -1.0, 2.0]).is_err());
        assert!(estimate_rate(&[8, 16], &[0.1, 0.05]).is_err());
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b = [10.0, 11.0, 12.0, 13.0];
        assert_eq!(ks_statistic(&a, &b), 1.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        let qs = quantiles_50_90_99(&v);
        assert!((qs[0] - 2.5).abs() < 1e-12);
        assert!(qs[2] <= 4.0 && qs[2] > 3.9);
    }
}
