//! Small statistics toolkit: straight-line fits, the one-sample
//! Kolmogorov–Smirnov test against an exponential law, and Poisson count
//! consistency.

use statrs::distribution::{Discrete, DiscreteCDF, Poisson};

/// Two-sided tail mass outside ±3σ of a normal law.
pub const THREE_SIGMA_TAIL: f64 = 0.002_699_796_063_260_2;

/// Result of a straight-line fit `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    pub intercept_std_error: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least squares. Standard errors come from the residual scatter
/// (`n - 2` degrees of freedom). `None` for fewer than two distinct `x`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let w = vec![1.0; x.len()];
    let mut fit = weighted_line(x, y, &w)?;
    let n = x.len();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - fit.intercept - fit.slope * xi).powi(2))
        .sum();
    let scale = if n > 2 { (ss_res / (n - 2) as f64).sqrt() } else { f64::NAN };
    fit.slope_std_error *= scale;
    fit.intercept_std_error *= scale;
    Some(fit)
}

/// Weighted least squares with `weights = 1 / variance`. Standard errors are
/// the parameter covariance `(XᵀWX)⁻¹`, i.e. they trust the supplied variances.
pub fn weighted_regression(x: &[f64], y: &[f64], weights: &[f64]) -> Option<LineFit> {
    weighted_line(x, y, weights)
}

fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> Option<LineFit> {
    assert!(x.len() == y.len() && x.len() == w.len(), "length mismatch");
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) || x.len() < 2 {
        return None;
    }
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        sxx += wi * (xi - xm) * (xi - xm);
        sxy += wi * (xi - xm) * (yi - ym);
        syy += wi * (yi - ym) * (yi - ym);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res = (syy - slope * sxy).max(0.0);
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_std_error: (1.0 / sxx).sqrt(),
        intercept_std_error: (1.0 / sw + xm * xm / sxx).sqrt(),
        r_squared,
        points: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// Largest distance between the empirical and the reference CDF.
    pub statistic: f64,
    pub p_value: f64,
    pub samples: usize,
}

impl KsResult {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// One-sample KS test of `samples` against `Exp(rate)`.
pub fn ks_exponential(samples: &[f64], rate: f64) -> KsResult {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = -(-rate * x.max(0.0)).exp_m1();
        d = d.max(cdf - i as f64 / nf).max((i + 1) as f64 / nf - cdf);
    }
    KsResult {
        statistic: d,
        p_value: if n == 0 { 1.0 } else { kolmogorov_sf(d, n) },
        samples: n,
    }
}

/// Asymptotic Kolmogorov survival function with the usual small-sample
/// correction `(√n + 0.12 + 0.11/√n) · D`.
fn kolmogorov_sf(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided p-value of observing `observed` counts from `Poisson(expected)`:
/// twice the smaller tail, capped at 1.
pub fn poisson_two_sided_p(observed: u64, expected: f64) -> f64 {
    if !(expected > 0.0) {
        return if observed == 0 { 1.0 } else { 0.0 };
    }
    let law = Poisson::new(expected).expect("positive mean");
    let lower = law.cdf(observed);
    let upper = law.sf(observed) + law.pmf(observed);
    (2.0 * lower.min(upper)).min(1.0)
}

/// Whether `observed` is within the Poisson equivalent of ±3σ of `expected`.
/// For large means this is the familiar `|n - μ| ≤ 3√μ`; for means of a few
/// counts the exact tails are used instead of the normal approximation.
pub fn poisson_consistent(observed: u64, expected: f64) -> bool {
    poisson_two_sided_p(observed, expected) >= THREE_SIGMA_TAIL
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [3.0, 5.0, 7.0, 9.0];
        let f = linear_regression(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert_eq!(f.r_squared, 1.0);
        assert!(f.slope_std_error.abs() < 1e-6);
    }

    #[test]
    fn noisy_line_standard_error() {
        // slope 0.5, unit noise; textbook SE = 1/sqrt(Sxx)
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y = [0.3, 0.2, 1.4, 1.2, 2.5, 2.1, 3.3, 3.4, 4.3, 4.4];
        let f = linear_regression(&x, &y).unwrap();
        let sxx = 82.5;
        let res: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - f.intercept - f.slope * a).powi(2))
            .sum();
        assert!((f.slope_std_error - (res / 8.0 / sxx).sqrt()).abs() < 1e-12);
        assert!(f.r_squared > 0.95 && f.r_squared < 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(linear_regression(&[1.0], &[1.0]).is_none());
        assert!(linear_regression(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }

    #[test]
    fn poisson_tails() {
        // P(X = 0 | μ = 1) = e^-1, lower tail at 0 doubled
        assert!((poisson_two_sided_p(0, 1.0) - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(poisson_two_sided_p(5, 5.0), 1.0);
        assert!(poisson_consistent(3, 1.0));
        assert!(!poisson_consistent(8, 1.0));
        // large mean: approaches the 3σ band
        assert!(poisson_consistent(10_290, 10_000.0));
        assert!(!poisson_consistent(10_320, 10_000.0));
        assert!(poisson_consistent(0, 0.0) && !poisson_consistent(1, 0.0));
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Q_KS(1.36) ~ 0.049, Q_KS(1.63) ~ 0.0098 (standard table)
        let q = |lambda: f64| kolmogorov_sf(lambda / 1e4, 100_000_000);
        assert!((q(1.36) - 0.0494).abs() < 1e-3, "{}", q(1.36));
        assert!((q(1.63) - 0.0098).abs() < 5e-4, "{}", q(1.63));
    }

    #[test]
    fn ks_accepts_exponential_rejects_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let exp: Vec<f64> = (0..5000)
            .map(|_| -(1.0 - rng.random::<f64>()).ln() / 3200.0)
            .collect();
        assert!(ks_exponential(&exp, 3200.0).passes(0.01));
        let uni: Vec<f64> = (0..5000).map(|_| rng.random::<f64>() / 1600.0).collect();
        assert!(!ks_exponential(&uni, 3200.0).passes(0.01));
        assert!(!ks_exponential(&exp, 4000.0).passes(0.01));
    }
}
