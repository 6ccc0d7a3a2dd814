use std::ops::Range;

use super::{AnalysisError, Histogram};

/// Bins a fit needs after discards.
pub const MIN_FIT_BINS: usize = 5;

/// Exponential `count(k) ≈ amplitude · exp(-rate · center_k)` fitted to a
/// histogram's bins.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFit {
    /// Decay rate, 1/s.
    pub rate: f64,
    pub rate_std_error: f64,
    /// Counts of a bin centred at `t = 0`.
    pub amplitude: f64,
    pub r_squared: f64,
    pub bins_used: Range<usize>,
    /// Width and origin of the fitted bins, seconds.
    pub bin_width: f64,
    pub origin: f64,
}

impl ExpFit {
    fn center(&self, k: usize) -> f64 {
        self.origin + (k as f64 + 0.5) * self.bin_width
    }

    /// Extrapolated count of bin `k` of the fitted histogram.
    pub fn predict(&self, k: usize) -> f64 {
        self.amplitude * (-self.rate * self.center(k)).exp()
    }

    /// Expected counts in `[a, b)` seconds, for any binning of the same data:
    /// integral of the density whose fitted-width bins reproduce [`Self::predict`].
    pub fn expected_count(&self, a: f64, b: f64) -> f64 {
        let half = 0.5 * self.rate * self.bin_width;
        let norm = self.amplitude / (2.0 * half.sinh());
        norm * ((-self.rate * a).exp() - (-self.rate * b).exp())
    }
}

/// Weighted least squares of `ln(count)` on bin centre, weights = counts.
///
/// The first `discard_first` bins are skipped; the fit then uses the
/// contiguous run of bins up to (excluding) the first one whose count is below
/// `min_bin_count` (at least 1, so every fitted bin has a logarithm).
pub fn fit_exponential(
    h: &Histogram,
    discard_first: usize,
    min_bin_count: u64,
) -> Result<ExpFit, AnalysisError> {
    let counts: Vec<f64> = h.counts.iter().map(|&c| c as f64).collect();
    fit_exponential_values(
        h.bin_start_seconds(0),
        h.bin_width_seconds(),
        &counts,
        discard_first,
        min_bin_count.max(1) as f64,
    )
}

/// [`fit_exponential`] on real-valued counts of bins `origin + k · width`.
pub fn fit_exponential_values(
    origin: f64,
    bin_width: f64,
    counts: &[f64],
    discard_first: usize,
    min_bin_count: f64,
) -> Result<ExpFit, AnalysisError> {
    let floor = if min_bin_count > 0.0 { min_bin_count } else { f64::MIN_POSITIVE };
    let start = discard_first.min(counts.len());
    let end = counts[start..]
        .iter()
        .position(|&c| c < floor)
        .map_or(counts.len(), |p| start + p);
    let used = end - start;
    if used < MIN_FIT_BINS {
        return Err(AnalysisError::InsufficientBins {
            needed: MIN_FIT_BINS,
            got: used,
        });
    }
    let x: Vec<f64> = (start..end)
        .map(|k| origin + (k as f64 + 0.5) * bin_width)
        .collect();
    let y: Vec<f64> = counts[start..end].iter().map(|c| c.ln()).collect();
    let line = crate::stats::weighted_regression(&x, &y, &counts[start..end]).ok_or(
        AnalysisError::InsufficientBins {
            needed: MIN_FIT_BINS,
            got: used,
        },
    )?;
    let rate = -line.slope;
    if !(rate > 0.0) {
        return Err(AnalysisError::Fit(format!(
            "fitted decay rate {rate} is not positive"
        )));
    }
    Ok(ExpFit {
        rate,
        rate_std_error: line.slope_std_error,
        amplitude: line.intercept.exp(),
        r_squared: line.r_squared,
        bins_used: start..end,
        bin_width,
        origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_exponential_is_exact() {
        let w = 0.1e-3;
        let counts: Vec<f64> = (0..30)
            .map(|k| 2739.0 * (-3200.0 * (k as f64 + 0.5) * w).exp())
            .collect();
        let f = fit_exponential_values(0.0, w, &counts, 1, 1e-3).unwrap();
        assert!((f.rate - 3200.0).abs() / 3200.0 < 1e-9, "{}", f.rate);
        assert!((f.amplitude - 2739.0).abs() / 2739.0 < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.bins_used, 1..30);
        assert!((f.predict(0) - counts[0]).abs() < 1e-6);
    }

    #[test]
    fn expected_count_reproduces_bins_and_splits() {
        let w = 0.1e-3;
        let counts: Vec<f64> = (0..20)
            .map(|k| 1000.0 * (-3200.0 * (k as f64 + 0.5) * w).exp())
            .collect();
        let f = fit_exponential_values(0.0, w, &counts, 0, 1e-3).unwrap();
        for k in 0..20 {
            let a = k as f64 * w;
            assert!((f.expected_count(a, a + w) - f.predict(k)).abs() < 1e-9 * f.predict(k));
            let halves = f.expected_count(a, a + w / 2.0) + f.expected_count(a + w / 2.0, a + w);
            assert!((halves - f.predict(k)).abs() < 1e-9 * f.predict(k));
        }
    }

    #[test]
    fn tail_cut_at_first_sparse_bin() {
        let h = Histogram {
            bin_width: 10,
            origin: 0,
            counts: vec![900, 500, 300, 200, 120, 80, 40, 3, 30, 1],
            total_events: 2173,
        };
        let f = fit_exponential(&h, 1, 5).unwrap();
        assert_eq!(f.bins_used, 1..7);
    }

    #[test]
    fn too_few_bins() {
        let h = Histogram {
            bin_width: 10,
            origin: 0,
            counts: vec![100, 50, 25, 12, 6, 0],
            total_events: 193,
        };
        assert_eq!(
            fit_exponential(&h, 1, 1),
            Err(AnalysisError::InsufficientBins { needed: 5, got: 4 })
        );
    }
}
