use super::filter::{apply_filter, design_bandpass, FilterSpec};
use super::{CircuitError, Waveform};

/// Electrical constants of the nanowire and readout loop (SI units).
///
/// `bias_current >= critical_current` is representable on purpose; the event
/// engine decides what an over-biased wire does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub kinetic_inductance: f64,
    pub hotspot_resistance: f64,
    /// Readout impedance in parallel with the shunt.
    pub load_resistance: f64,
    pub bias_current: f64,
    pub critical_current: f64,
    pub amplifier_gain_db: f64,
    pub hotspot_duration: f64,
}

impl Default for CircuitParams {
    /// Constants of the simulated pulse overlay: 500 nH, 5 kΩ, 25 Ω, 25 µA.
    fn default() -> Self {
        Self {
            kinetic_inductance: 500e-9,
            hotspot_resistance: 5e3,
            load_resistance: 25.0,
            bias_current: 25e-6,
            critical_current: 25.3e-6,
            amplifier_gain_db: 56.0,
            hotspot_duration: 1e-9,
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<(), CircuitError> {
        let checks = [
            ("kinetic_inductance", self.kinetic_inductance),
            ("hotspot_resistance", self.hotspot_resistance),
            ("load_resistance", self.load_resistance),
            ("bias_current", self.bias_current),
            ("critical_current", self.critical_current),
            ("hotspot_duration", self.hotspot_duration),
        ];
        for (name, value) in checks {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CircuitError::InvalidParameter { name, value });
            }
        }
        if !self.amplifier_gain_db.is_finite() {
            return Err(CircuitError::InvalidParameter {
                name: "amplifier_gain_db",
                value: self.amplifier_gain_db,
            });
        }
        Ok(())
    }

    pub fn with_bias(self, bias_current: f64) -> Self {
        Self {
            bias_current,
            ..self
        }
    }

    /// Recovery constant `L_k / R_L`.
    pub fn recovery_time_constant(&self) -> f64 {
        self.kinetic_inductance / self.load_resistance
    }

    /// Fall constant `L_k / (R_n + R_L)`.
    pub fn fall_time_constant(&self) -> f64 {
        self.kinetic_inductance / (self.hotspot_resistance + self.load_resistance)
    }

    /// Nanowire current the resistive phase decays toward.
    pub fn resistive_steady_state(&self) -> f64 {
        self.bias_current * self.load_resistance / (self.hotspot_resistance + self.load_resistance)
    }

    pub fn amplifier_gain(&self) -> f64 {
        10f64.powf(self.amplifier_gain_db / 20.0)
    }

    /// Nanowire current `t` seconds after a click.
    pub fn nanowire_current(&self, t: f64) -> Result<f64, CircuitError> {
        if t < 0.0 || t.is_nan() {
            return Err(CircuitError::NegativeTime(t));
        }
        Ok(self.current_after_click(t))
    }

    pub(crate) fn current_after_click(&self, t: f64) -> f64 {
        let ib = self.bias_current;
        let floor = self.resistive_steady_state();
        if t <= self.hotspot_duration {
            floor + (ib - floor) * (-t / self.fall_time_constant()).exp()
        } else {
            let at_reset = self.current_after_click(self.hotspot_duration);
            ib - (ib - at_reset) * (-(t - self.hotspot_duration) / self.recovery_time_constant()).exp()
        }
    }

    /// Voltage across the load `t` seconds after a click: the diverted current
    /// times `R_L`. Zero before the click.
    pub fn load_voltage(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            (self.bias_current - self.current_after_click(t)) * self.load_resistance
        }
    }

    /// Largest sample period that resolves the fall (a quarter of the fall constant).
    pub fn max_sample_period(&self) -> f64 {
        self.fall_time_constant() / 4.0
    }

    pub fn load_voltage_waveform(&self, grid: SampleGrid) -> Result<Waveform, CircuitError> {
        self.validate()?;
        let required = self.max_sample_period();
        if grid.sample_period > required {
            return Err(CircuitError::UnderResolved {
                actual: grid.sample_period,
                required,
            });
        }
        let n = grid.len();
        let samples = (0..n)
            .map(|k| self.load_voltage(k as f64 * grid.sample_period - grid.click_time))
            .collect();
        Waveform::new(samples, grid.sample_period, 0.0)
    }
}

/// Sampling grid for pulse synthesis. The click happens `click_time` seconds
/// after the first sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleGrid {
    pub sample_period: f64,
    pub duration: f64,
    pub click_time: f64,
}

impl SampleGrid {
    /// 50 GS/s; resolves the 0.1 ns fall of the default circuit.
    pub const DEFAULT_SAMPLE_PERIOD: f64 = 20e-12;

    pub fn new(sample_period: f64, duration: f64) -> Self {
        Self {
            sample_period,
            duration,
            click_time: 0.0,
        }
    }

    pub fn with_click_at(self, click_time: f64) -> Self {
        Self { click_time, ..self }
    }

    pub fn len(&self) -> usize {
        ((self.duration / self.sample_period).round() as usize).max(1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Ideal amplifier behind a band-pass. The chain is inverting, so a click
/// shows up as a negative-going output pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutChain {
    pub passband: FilterSpec,
}

impl ReadoutChain {
    /// Narrow-band amplifier chain: 4th order, 15–580 MHz.
    pub fn narrow_band() -> Self {
        Self {
            passband: FilterSpec::new(4, 15e6, 580e6),
        }
    }

    /// Amplifier with the improved low-frequency response: 0.001–1000 MHz.
    pub fn wide_band() -> Self {
        Self {
            passband: FilterSpec::new(4, 1e3, 1000e6),
        }
    }

    /// Band-limited load voltage, before gain.
    pub fn filtered_load_pulse(
        &self,
        params: &CircuitParams,
        grid: SampleGrid,
    ) -> Result<Waveform, CircuitError> {
        let raw = params.load_voltage_waveform(grid)?;
        let sections = design_bandpass(&self.passband, grid.sample_period)?;
        apply_filter(&sections, &raw)
    }

    /// Amplifier output: inverted, amplified, band-limited.
    pub fn output_pulse(
        &self,
        params: &CircuitParams,
        grid: SampleGrid,
    ) -> Result<Waveform, CircuitError> {
        Ok(self
            .filtered_load_pulse(params, grid)?
            .scaled(-params.amplifier_gain()))
    }

    /// What the output would look like with infinite bandwidth.
    pub fn unfiltered_output_pulse(
        params: &CircuitParams,
        grid: SampleGrid,
    ) -> Result<Waveform, CircuitError> {
        Ok(params
            .load_voltage_waveform(grid)?
            .scaled(-params.amplifier_gain()))
    }
}
