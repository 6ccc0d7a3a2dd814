use crate::circuit::{CircuitParams, PerturbationKernel};

use super::{ProcsimError, RateModel};

/// What an unshunted wire does once the effective bias reaches `I_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatchPolicy {
    /// Latching is not modelled.
    #[default]
    None,
    /// The wire stays resistive for the rest of the run: no further clicks.
    PermanentUntilReset,
}

/// Integration step for the single-click hazard integrals.
const HAZARD_STEP: f64 = 10e-12;

/// Recovered-current criterion for the quiet regime, in recovery constants.
const QUIET_RECOVERY_TAUS: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    pub circuit: CircuitParams,
    pub rates: RateModel,
    pub kernel: PerturbationKernel,
    pub shunt_enabled: bool,
    pub latch_policy: LatchPolicy,
}

impl DetectorModel {
    pub fn validate(&self) -> Result<(), ProcsimError> {
        self.circuit.validate()?;
        self.rates.validate()?;
        if self.kernel.duration() > crate::circuit::kernel::MAX_KERNEL_DURATION * (1.0 + 1e-9) {
            return Err(ProcsimError::Config("kernel longer than 2 us".into()));
        }
        Ok(())
    }

    pub fn with_bias(&self, bias_current: f64) -> Self {
        Self {
            circuit: self.circuit.with_bias(bias_current),
            ..self.clone()
        }
    }

    pub fn with_kernel(&self, kernel: PerturbationKernel) -> Self {
        Self {
            kernel,
            ..self.clone()
        }
    }

    /// True when reaching `I_c` ends the run.
    pub fn can_latch(&self) -> bool {
        !self.shunt_enabled && self.latch_policy == LatchPolicy::PermanentUntilReset
    }

    /// Time after a click beyond which neither the kernel nor the recovery
    /// deficit matters: the kernel has ended and `I_b - i < I_b e^-40`.
    pub fn quiet_after(&self) -> f64 {
        let recovered = self.circuit.hotspot_duration
            + QUIET_RECOVERY_TAUS * self.circuit.recovery_time_constant();
        recovered.max(self.kernel.duration())
    }

    /// `I_eff(t)` for clicks `history` (sorted, all `<= t`): recovery from the
    /// most recent click plus every kernel still running.
    pub fn effective_bias(&self, t: f64, history: &[f64]) -> f64 {
        let Some(&last) = history.last() else {
            return self.circuit.bias_current;
        };
        debug_assert!(last <= t);
        let mut current = self.circuit.current_after_click((t - last).max(0.0));
        let span = self.kernel.duration();
        for &tj in history.iter().rev() {
            let u = t - tj;
            if u >= span {
                break;
            }
            current += self.kernel.value(u);
        }
        current
    }

    /// Dark-count hazard `u` seconds after an isolated click; zero while the
    /// wire is resistive.
    pub fn single_click_hazard(&self, u: f64) -> f64 {
        if u <= self.circuit.hotspot_duration {
            return 0.0;
        }
        let bias = self.circuit.current_after_click(u) + self.kernel.value(u);
        self.rates.dark_rate(bias)
    }

    /// Probability that an isolated click is followed by another click within
    /// `window` (dark counts only); the branching probability of the
    /// afterpulse train model.
    pub fn follow_probability(&self, window: f64) -> f64 {
        1.0 - (-self.integrated_hazard(window)).exp()
    }

    fn integrated_hazard(&self, until: f64) -> f64 {
        let th = self.circuit.hotspot_duration;
        if until <= th {
            return 0.0;
        }
        let steps = ((until - th) / HAZARD_STEP).ceil() as usize;
        let h = (until - th) / steps as f64;
        let mut sum = 0.5 * (self.single_click_hazard(th) + self.single_click_hazard(until));
        for k in 1..steps {
            sum += self.single_click_hazard(th + k as f64 * h);
        }
        sum * h
    }

    /// Long-run dark click rate of the renewal approximation (each click resets
    /// the wire and older kernels are ignored): `1 / E[gap]`.
    pub fn stationary_rate(&self) -> f64 {
        let th = self.circuit.hotspot_duration;
        let horizon = self.quiet_after();
        let steps = ((horizon - th) / HAZARD_STEP).ceil() as usize;
        let h = (horizon - th) / steps as f64;
        let mut lambda = 0.0;
        let mut survival_integral = th;
        let mut prev_rate = self.single_click_hazard(th);
        let mut prev_survival = 1.0;
        for k in 1..=steps {
            let u = th + k as f64 * h;
            let rate = self.single_click_hazard(u);
            lambda += 0.5 * (prev_rate + rate) * h;
            let survival = (-lambda).exp();
            survival_integral += 0.5 * (prev_survival + survival) * h;
            prev_rate = rate;
            prev_survival = survival;
        }
        let tail_rate = self.rates.dark_rate(self.circuit.bias_current);
        let mean_gap = if tail_rate > 0.0 {
            survival_integral + prev_survival / tail_rate
        } else {
            f64::INFINITY
        };
        1.0 / mean_gap
    }

    /// Detection probability of a pulse of mean photon number `mu` on a fully
    /// recovered, unperturbed wire.
    pub fn nominal_detection_probability(&self, mu: f64) -> f64 {
        detection_probability(mu, self.rates.efficiency(self.circuit.bias_current))
    }
}

/// `1 - exp(-mu * eta)`: at least one of a Poisson number of photons, each
/// detected independently with probability `eta`.
pub fn detection_probability(mu: f64, efficiency: f64) -> f64 {
    -(-mu * efficiency).exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{bias_perturbation_kernel, KernelMode};

    pub(crate) fn model(amplitude: f64) -> DetectorModel {
        let kernel = bias_perturbation_kernel(
            None,
            &KernelMode::Parametric {
                amplitude,
                center: 180e-9,
                width: 40e-9,
            },
        )
        .unwrap();
        DetectorModel {
            circuit: CircuitParams::default(),
            rates: RateModel {
                dark_rate_ref: 3200.0,
                dark_rate_slope: 2.1e6,
                efficiency_max: 0.025,
                efficiency_slope: 6e6,
                reference_bias: 25e-6,
            },
            kernel,
            shunt_enabled: true,
            latch_policy: LatchPolicy::None,
        }
    }

    #[test]
    fn empty_history_is_bias() {
        let m = model(0.4e-6);
        assert_eq!(m.effective_bias(1.0, &[]), m.circuit.bias_current);
    }

    #[test]
    fn single_click_adds_kernel_peak() {
        let m = model(0.4e-6);
        let t = 1e-3;
        let got = m.effective_bias(t, &[t - 180e-9]);
        let want = m.circuit.current_after_click(180e-9) + 0.4e-6;
        assert!((got - want).abs() < 1e-15, "{got} {want}");
    }

    #[test]
    fn two_clicks_sum_kernels() {
        let m = model(0.4e-6);
        let (t1, t2) = (1e-3, 1e-3 + 180e-9);
        let t = t2 + 180e-9;
        let got = m.effective_bias(t, &[t1, t2]);
        // direct oracle: Gaussian evaluated analytically
        let g = |u: f64| 0.4e-6 * (-0.5 * ((u - 180e-9) / 40e-9).powi(2)).exp();
        let want = m.circuit.current_after_click(180e-9) + g(180e-9) + g(360e-9);
        assert!((got - want).abs() < 1e-12 * want, "{got} {want}");
    }

    #[test]
    fn old_clicks_do_not_contribute() {
        let m = model(0.4e-6);
        let t = 1.0;
        let got = m.effective_bias(t, &[t - 5e-6, t - 3e-6]);
        let want = m.circuit.current_after_click(3e-6);
        assert_eq!(got, want);
    }

    #[test]
    fn follow_probability_of_null_kernel_is_chance_level() {
        let m = model(0.0);
        let q = m.follow_probability(1000e-9);
        // hazard ~ constant 3200 cps once recovered; the dead time removes a bit
        let upper = 1.0 - (-3200.0f64 * 1000e-9).exp();
        assert!(q < upper && q > 0.8 * upper, "{q} {upper}");
        assert!(model(0.4e-6).follow_probability(1000e-9) > q);
    }

    #[test]
    fn stationary_rate_near_chance() {
        let m = model(0.0);
        let r = m.stationary_rate();
        // dead time of ~100 ns barely matters at 3200 cps
        assert!((r - 3200.0).abs() / 3200.0 < 1e-3, "{r}");
    }

    #[test]
    fn shunt_prevents_latching() {
        let mut m = model(0.0);
        m.latch_policy = LatchPolicy::PermanentUntilReset;
        assert!(!m.can_latch());
        m.shunt_enabled = false;
        assert!(m.can_latch());
    }

    #[test]
    fn poisson_photon_detection() {
        assert_eq!(detection_probability(0.0, 0.5), 0.0);
        assert!((detection_probability(10.0, 0.025) - (1.0 - (-0.25f64).exp())).abs() < 1e-15);
    }
}
