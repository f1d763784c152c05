//! Statistical helpers for the Monte Carlo experiments: normal CDF values
//! for reference curves, and exact (Clopper–Pearson) binomial confidence
//! intervals for empirical frequencies.

use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::erf::erf;

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// `P(|g| ≤ a)` for a standard Gaussian `g`: the measure of the symmetric
/// slab `[-a, a]`, equal to `2Φ(a) − 1`.
pub fn gaussian_slab_probability(a: f64) -> f64 {
    assert!(a >= 0.0, "slab half-width must be nonnegative");
    erf(a / std::f64::consts::SQRT_2)
}

/// Two-sided binomial confidence interval at the given confidence level
/// (e.g. 0.95), via the Beta-quantile form. Exact coverage: the interval is
/// conservative for every `hits/trials`.
pub fn clopper_pearson(hits: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(hits <= trials, "hits exceed trials");
    assert!(trials > 0, "empty sample");
    assert!((0.0..1.0).contains(&confidence) || confidence == 0.0 || confidence < 1.0);
    let alpha = 1.0 - confidence;
    let (k, n) = (hits as f64, trials as f64);
    let lo = if hits == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("valid Beta").inverse_cdf(alpha / 2.0)
    };
    let hi = if hits == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("valid Beta").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// Binomial standard error `sqrt(p̂(1-p̂)/n)` of an empirical frequency.
pub fn binomial_std_error(hits: u64, trials: u64) -> f64 {
    assert!(trials > 0);
    let p = hits as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-8);
        assert!((normal_cdf(-1.96) - 0.024997895148220435).abs() < 1e-8);
        assert!((gaussian_slab_probability(1.0) - 0.6826894921370859).abs() < 1e-8);
        assert!((gaussian_slab_probability(2.0) - 0.9544997361036416).abs() < 1e-8);
    }

    #[test]
    fn clopper_pearson_brackets_truth() {
        // 95% interval for 50/100 is roughly (0.398, 0.602).
        let (lo, hi) = clopper_pearson(50, 100, 0.95);
        assert!((lo - 0.39832).abs() < 5e-4, "lo = {lo}");
        assert!((hi - 0.60168).abs() < 5e-4, "hi = {hi}");
        // Edge cases.
        let (lo, hi) = clopper_pearson(0, 20, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.16843).abs() < 5e-4, "hi = {hi}");
        let (lo, hi) = clopper_pearson(20, 20, 0.95);
        assert!((lo - 0.83157).abs() < 5e-4, "lo = {lo}");
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn interval_contains_point_estimate() {
        for hits in [0u64, 1, 7, 100, 499, 500] {
            let (lo, hi) = clopper_pearson(hits, 500, 0.95);
            let p = hits as f64 / 500.0;
            assert!(lo <= p && p <= hi, "CI must contain the point estimate");
            assert!(lo >= 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn std_error_peaks_at_half() {
        let mid = binomial_std_error(500, 1000);
        assert!((mid - 0.015811388).abs() < 1e-8);
        assert!(binomial_std_error(10, 1000) < mid);
        assert_eq!(binomial_std_error(0, 50), 0.0);
    }
}
