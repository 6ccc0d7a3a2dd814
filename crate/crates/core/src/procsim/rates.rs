use super::ProcsimError;

/// Bias dependence of the dark-count rate and of the detection efficiency.
///
/// Both laws are exponentials in the bias offset from `reference_bias`; the
/// efficiency saturates at `efficiency_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    /// Dark counts per second at `reference_bias`.
    pub dark_rate_ref: f64,
    /// Exponential slope of the dark rate, 1/A.
    pub dark_rate_slope: f64,
    pub efficiency_max: f64,
    /// Exponential slope of the efficiency below saturation, 1/A.
    pub efficiency_slope: f64,
    pub reference_bias: f64,
}

impl RateModel {
    pub fn validate(&self) -> Result<(), ProcsimError> {
        let bad = |what: &str, v: f64| Err(ProcsimError::Config(format!("rates: {what} = {v}")));
        if !(self.dark_rate_ref >= 0.0) || !self.dark_rate_ref.is_finite() {
            return bad("dark_rate_ref must be >= 0", self.dark_rate_ref);
        }
        if !(0.0..=1.0).contains(&self.efficiency_max) {
            return bad("efficiency_max must be in [0, 1]", self.efficiency_max);
        }
        if !(self.dark_rate_slope >= 0.0) || !self.dark_rate_slope.is_finite() {
            return bad("dark_rate_slope must be >= 0", self.dark_rate_slope);
        }
        if !(self.efficiency_slope >= 0.0) || !self.efficiency_slope.is_finite() {
            return bad("efficiency_slope must be >= 0", self.efficiency_slope);
        }
        if !self.reference_bias.is_finite() {
            return bad("reference_bias must be finite", self.reference_bias);
        }
        Ok(())
    }

    pub fn dark_rate(&self, bias: f64) -> f64 {
        self.dark_rate_ref * (self.dark_rate_slope * (bias - self.reference_bias)).exp()
    }

    pub fn efficiency(&self, bias: f64) -> f64 {
        let eta = self.efficiency_max * (self.efficiency_slope * (bias - self.reference_bias)).exp();
        eta.min(self.efficiency_max)
    }

    /// Bias at which the dark rate equals `rate` (inverse of [`Self::dark_rate`]).
    pub fn bias_for_dark_rate(&self, rate: f64) -> Option<f64> {
        if self.dark_rate_ref > 0.0 && self.dark_rate_slope > 0.0 && rate > 0.0 {
            Some(self.reference_bias + (rate / self.dark_rate_ref).ln() / self.dark_rate_slope)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rates() -> RateModel {
        RateModel {
            dark_rate_ref: 3200.0,
            dark_rate_slope: 2.1e6,
            efficiency_max: 0.025,
            efficiency_slope: 6e6,
            reference_bias: 25e-6,
        }
    }

    #[test]
    fn reference_point() {
        let r = rates();
        assert_eq!(r.dark_rate(25e-6), 3200.0);
        assert_eq!(r.efficiency(25e-6), 0.025);
        assert_eq!(r.efficiency(26e-6), 0.025);
        assert!((r.efficiency(24e-6) - 0.025 * (-6.0f64).exp()).abs() < 1e-15);
        let b = r.bias_for_dark_rate(3200.0 * 2f64.exp()).unwrap();
        assert!((b - (25e-6 + 2.0 / 2.1e6)).abs() < 1e-18);
    }

    #[test]
    fn validation() {
        assert!(rates().validate().is_ok());
        for bad in [
            RateModel { dark_rate_ref: -1.0, ..rates() },
            RateModel { efficiency_max: 1.5, ..rates() },
            RateModel { dark_rate_slope: -1.0, ..rates() },
            RateModel { efficiency_slope: f64::NAN, ..rates() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    proptest! {
        #[test]
        fn laws_are_monotone(a in 20e-6..27e-6f64, b in 20e-6..27e-6f64) {
            let r = rates();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(r.dark_rate(lo) <= r.dark_rate(hi));
            prop_assert!(r.efficiency(lo) <= r.efficiency(hi));
            prop_assert!(r.efficiency(hi) <= r.efficiency_max);
        }
    }
}
