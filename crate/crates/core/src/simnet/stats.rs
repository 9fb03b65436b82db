//! Small statistics helpers for the experiment reports.

use statrs::distribution::{ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Two-sided critical value of the standard normal at level `alpha`.
pub fn z_critical(alpha: f64) -> f64 {
    std_normal().inverse_cdf(1.0 - alpha / 2.0)
}

/// Wilson score interval for `successes` out of `n` at confidence `1 − alpha`.
pub fn wilson_interval(successes: u64, n: u64, alpha: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = z_critical(alpha);
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Pooled two-proportion z statistic and its two-sided p-value.
pub fn two_proportion_z(x1: u64, n1: u64, x2: u64, n2: u64) -> (f64, f64) {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let pooled = (x1 + x2) as f64 / (n1f + n2f);
    let se = (pooled * (1.0 - pooled) * (1.0 / n1f + 1.0 / n2f)).sqrt();
    if se == 0.0 || !se.is_finite() {
        return (0.0, 1.0);
    }
    let z = (x1 as f64 / n1f - x2 as f64 / n2f) / se;
    (z, 2.0 * (1.0 - std_normal().cdf(z.abs())))
}

/// Standard deviation of a Bernoulli(`p`) mean over `n` samples.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values() {
        assert!((z_critical(0.05) - 1.959_963_985).abs() < 1e-6);
        assert!((z_critical(0.01) - 2.575_829_304).abs() < 1e-6);
    }

    #[test]
    fn wilson_matches_reference() {
        // 81 of 263 at 95%: (0.2553, 0.3662), from the closed form.
        let (lo, hi) = wilson_interval(81, 263, 0.05);
        assert!((lo - 0.255_3).abs() < 1e-3, "{lo}");
        assert!((hi - 0.366_2).abs() < 1e-3, "{hi}");
    }

    #[test]
    fn z_test_symmetry_and_degenerate_case() {
        let (z, p) = two_proportion_z(50, 100, 50, 100);
        assert_eq!(z, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
        let (z1, _) = two_proportion_z(60, 100, 40, 100);
        let (z2, _) = two_proportion_z(40, 100, 60, 100);
        assert!((z1 + z2).abs() < 1e-12);
        assert!((z1 - 2.828_427).abs() < 1e-5);
        assert_eq!(two_proportion_z(0, 10, 0, 10), (0.0, 1.0));
    }
}
