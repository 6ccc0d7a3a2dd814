use crate::{seconds_to_ps, Picos};

use super::ProcsimError;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StimulusConfig {
    /// Laser off: dark counts only.
    #[default]
    None,
    /// Pulses at `rate` Hz, each with Poisson mean `mu` photons.
    Periodic { rate: f64, mu: f64 },
    /// Pairs `(w·window, w·window + separation)` in consecutive windows.
    DoublePulse {
        separation: f64,
        window: f64,
        mu: f64,
    },
}

impl StimulusConfig {
    pub fn validate(&self) -> Result<(), ProcsimError> {
        let fail = |msg: String| Err(ProcsimError::Config(format!("stimulus: {msg}")));
        match *self {
            StimulusConfig::None => Ok(()),
            StimulusConfig::Periodic { rate, mu } => {
                if !(rate > 0.0 && rate.is_finite()) || seconds_to_ps(1.0 / rate) == 0 {
                    return fail(format!("rate must be > 0 and <= 1 THz, got {rate}"));
                }
                if !(mu >= 0.0 && mu.is_finite()) {
                    return fail(format!("mu must be >= 0, got {mu}"));
                }
                Ok(())
            }
            StimulusConfig::DoublePulse {
                separation,
                window,
                mu,
            } => {
                if !(separation > 0.0) || seconds_to_ps(separation) == 0 {
                    return fail(format!("separation must be > 0, got {separation}"));
                }
                if !(separation < window && window.is_finite()) {
                    return fail(format!(
                        "separation ({separation} s) must be shorter than the window ({window} s)"
                    ));
                }
                if !(mu >= 0.0 && mu.is_finite()) {
                    return fail(format!("mu must be >= 0, got {mu}"));
                }
                Ok(())
            }
        }
    }

    pub fn mu(&self) -> f64 {
        match *self {
            StimulusConfig::None => 0.0,
            StimulusConfig::Periodic { mu, .. } | StimulusConfig::DoublePulse { mu, .. } => mu,
        }
    }

    /// Times written to the sync channel: every pulse in periodic mode, and
    /// the start of each window (the first pulse of each pair) in double-pulse
    /// mode, the way a window trigger would mark it.
    pub fn sync_times(&self, duration: f64) -> Result<Vec<Picos>, ProcsimError> {
        let pulses = make_stimulus(self, duration)?;
        Ok(match self {
            StimulusConfig::DoublePulse { .. } => pulses.into_iter().step_by(2).collect(),
            _ => pulses,
        })
    }
}

/// All laser pulse times in `[0, duration)`, in picoseconds.
pub fn make_stimulus(config: &StimulusConfig, duration: f64) -> Result<Vec<Picos>, ProcsimError> {
    config.validate()?;
    let end = seconds_to_ps(duration.max(0.0));
    Ok(match *config {
        StimulusConfig::None => Vec::new(),
        StimulusConfig::Periodic { rate, .. } => {
            let period = seconds_to_ps(1.0 / rate);
            (0..end.div_ceil(period)).map(|k| k * period).collect()
        }
        StimulusConfig::DoublePulse {
            separation, window, ..
        } => {
            let (window, separation) = (seconds_to_ps(window), seconds_to_ps(separation));
            let mut times = Vec::new();
            let mut start = 0;
            while start + separation < end {
                times.push(start);
                times.push(start + separation);
                start += window;
            }
            times
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_half_megahertz() {
        let t = make_stimulus(&StimulusConfig::Periodic { rate: 0.5e6, mu: 10.0 }, 1.0).unwrap();
        assert_eq!(t.len(), 500_000);
        assert!(t.windows(2).all(|w| w[1] - w[0] == 2_000_000));
        assert_eq!(t[0], 0);
    }

    #[test]
    fn double_pulse_pairs() {
        let cfg = StimulusConfig::DoublePulse {
            separation: 180e-9,
            window: 2000e-9,
            mu: 10.0,
        };
        let t = make_stimulus(&cfg, 10e-6).unwrap();
        assert_eq!(t.len(), 10);
        for (w, pair) in t.chunks(2).enumerate() {
            assert_eq!(pair[0], w as u64 * 2_000_000);
            assert_eq!(pair[1] - pair[0], 180_000);
        }
        let sync = cfg.sync_times(10e-6).unwrap();
        assert_eq!(sync, vec![0, 2_000_000, 4_000_000, 6_000_000, 8_000_000]);
    }

    #[test]
    fn zero_duration_is_empty() {
        for cfg in [
            StimulusConfig::None,
            StimulusConfig::Periodic { rate: 1e6, mu: 1.0 },
            StimulusConfig::DoublePulse {
                separation: 100e-9,
                window: 2e-6,
                mu: 1.0,
            },
        ] {
            assert!(make_stimulus(&cfg, 0.0).unwrap().is_empty());
        }
    }

    #[test]
    fn separation_must_fit_window() {
        let cfg = StimulusConfig::DoublePulse {
            separation: 2e-6,
            window: 2e-6,
            mu: 1.0,
        };
        assert!(matches!(make_stimulus(&cfg, 1.0), Err(ProcsimError::Config(_))));
        let neg = StimulusConfig::Periodic { rate: 1e6, mu: -1.0 };
        assert!(neg.validate().is_err());
    }
}
