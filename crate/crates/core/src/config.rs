//! TOML run configuration.
//!
//! A file may set any subset of the keys of the shipped profile
//! (`profiles/default-v1.toml`); the rest is taken from the profile. Unknown keys
//! are rejected. Sections: `[circuit]`, `[rates]`, `[kernel]`, `[detector]`,
//! `[stimulus]`, `[run]`, plus an optional top-level `preset` name.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::circuit::kernel::MAX_KERNEL_DURATION;
use crate::circuit::{
    bias_perturbation_kernel, CircuitParams, FilterSpec, KernelMode, PerturbationKernel,
    ReadoutChain, SampleGrid,
};
use crate::procsim::{DetectorModel, LatchPolicy, ProcsimError, RateModel, StimulusConfig};

/// The calibrated default model.
pub const DEFAULT_PROFILE: &str = include_str!("../profiles/default-v1.toml");
pub const DEFAULT_PROFILE_NAME: &str = "default-v1";

/// Environment variable that overrides the configured seed.
pub const SEED_ENV: &str = "SNSPD_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config: `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("config: {0}")]
    Model(#[from] ProcsimError),
    #[error("config: cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

macro_rules! section {
    ($name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, Deserialize, PartialEq)]
        #[serde(deny_unknown_fields)]
        struct $name { $($field: Option<$ty>),* }

        impl $name {
            fn over(self, base: Self) -> Self {
                Self { $($field: self.$field.or(base.$field)),* }
            }
        }
    };
}

section!(RawCircuit {
    kinetic_inductance_h: f64,
    hotspot_resistance_ohm: f64,
    load_resistance_ohm: f64,
    bias_current_a: f64,
    critical_current_a: f64,
    amplifier_gain_db: f64,
    hotspot_duration_s: f64,
});

section!(RawRates {
    dark_rate_ref_hz: f64,
    dark_rate_slope_per_a: f64,
    efficiency_max: f64,
    efficiency_slope_per_a: f64,
    reference_bias_a: f64,
});

section!(RawKernel {
    mode: String,
    amplitude_a: f64,
    center_s: f64,
    width_s: f64,
    filter_order: usize,
    passband_low_hz: f64,
    passband_high_hz: f64,
    coupling_a_per_v: f64,
    time_offset_s: f64,
});

section!(RawDetector {
    shunt_enabled: bool,
    latch_policy: String,
});

section!(RawStimulus {
    mode: String,
    rate_hz: f64,
    mu: f64,
    separation_s: f64,
    window_s: f64,
});

section!(RawRun {
    duration_s: f64,
    seed: u64,
    output: PathBuf,
});

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    #[serde(default)]
    circuit: RawCircuit,
    #[serde(default)]
    rates: RawRates,
    #[serde(default)]
    kernel: RawKernel,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    stimulus: RawStimulus,
    #[serde(default)]
    run: RawRun,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    fn over(self, base: Self) -> Self {
        Self {
            preset: self.preset.or(base.preset),
            circuit: self.circuit.over(base.circuit),
            rates: self.rates.over(base.rates),
            kernel: self.kernel.over(base.kernel),
            detector: self.detector.over(base.detector),
            stimulus: self.stimulus.over(base.stimulus),
            run: self.run.over(base.run),
        }
    }
}

/// How the post-click perturbation is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    None,
    Parametric {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Cut from the band-limited pulse of `passband`. Without an explicit
    /// coupling, the coupling and delay are calibrated so the narrow-band
    /// reference readout gives a kernel peaking at `amplitude` at `center`.
    FromFilter {
        passband: FilterSpec,
        coupling: Option<f64>,
        time_offset: Option<f64>,
        amplitude: f64,
        center: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub circuit: CircuitParams,
    pub rates: RateModel,
    pub kernel: KernelSpec,
    pub shunt_enabled: bool,
    pub latch_policy: LatchPolicy,
    pub stimulus: StimulusConfig,
    pub duration: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn default_profile() -> Self {
        Self::from_toml_str("").expect("shipped profile is valid")
    }

    /// Parses `text` and fills unset keys from the default profile.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let base = RawConfig::parse(DEFAULT_PROFILE)?;
        let raw = RawConfig::parse(text)?.over(base);
        Self::resolve(raw)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    fn resolve(raw: RawConfig) -> Result<Self, ConfigError> {
        fn need<T: Clone>(v: &Option<T>, field: &str) -> Result<T, ConfigError> {
            v.clone().ok_or_else(|| invalid(field, "missing"))
        }
        let c = &raw.circuit;
        let circuit = CircuitParams {
            kinetic_inductance: need(&c.kinetic_inductance_h, "circuit.kinetic_inductance_h")?,
            hotspot_resistance: need(&c.hotspot_resistance_ohm, "circuit.hotspot_resistance_ohm")?,
            load_resistance: need(&c.load_resistance_ohm, "circuit.load_resistance_ohm")?,
            bias_current: need(&c.bias_current_a, "circuit.bias_current_a")?,
            critical_current: need(&c.critical_current_a, "circuit.critical_current_a")?,
            amplifier_gain_db: need(&c.amplifier_gain_db, "circuit.amplifier_gain_db")?,
            hotspot_duration: need(&c.hotspot_duration_s, "circuit.hotspot_duration_s")?,
        };
        circuit.validate().map_err(|e| match e {
            crate::circuit::CircuitError::InvalidParameter { name, value } => {
                invalid(&format!("circuit.{name}"), format!("must be > 0, got {value}"))
            }
            other => invalid("circuit", other.to_string()),
        })?;
        let r = &raw.rates;
        let rates = RateModel {
            dark_rate_ref: need(&r.dark_rate_ref_hz, "rates.dark_rate_ref_hz")?,
            dark_rate_slope: need(&r.dark_rate_slope_per_a, "rates.dark_rate_slope_per_a")?,
            efficiency_max: need(&r.efficiency_max, "rates.efficiency_max")?,
            efficiency_slope: need(&r.efficiency_slope_per_a, "rates.efficiency_slope_per_a")?,
            reference_bias: need(&r.reference_bias_a, "rates.reference_bias_a")?,
        };
        rates.validate().map_err(|e| invalid("rates", e.to_string()))?;

        let k = &raw.kernel;
        let kernel = match need(&k.mode, "kernel.mode")?.as_str() {
            "none" => KernelSpec::None,
            "parametric" => KernelSpec::Parametric {
                amplitude: need(&k.amplitude_a, "kernel.amplitude_a")?,
                center: need(&k.center_s, "kernel.center_s")?,
                width: need(&k.width_s, "kernel.width_s")?,
            },
            "from-filter" => KernelSpec::FromFilter {
                passband: FilterSpec::new(
                    need(&k.filter_order, "kernel.filter_order")?,
                    need(&k.passband_low_hz, "kernel.passband_low_hz")?,
                    need(&k.passband_high_hz, "kernel.passband_high_hz")?,
                ),
                coupling: k.coupling_a_per_v,
                time_offset: k.time_offset_s,
                amplitude: need(&k.amplitude_a, "kernel.amplitude_a")?,
                center: need(&k.center_s, "kernel.center_s")?,
            },
            other => {
                return Err(invalid(
                    "kernel.mode",
                    format!("unknown mode `{other}` (none, parametric, from-filter)"),
                ))
            }
        };

        let d = &raw.detector;
        let latch_policy = match need(&d.latch_policy, "detector.latch_policy")?.as_str() {
            "none" => LatchPolicy::None,
            "permanent-until-reset" => LatchPolicy::PermanentUntilReset,
            other => {
                return Err(invalid(
                    "detector.latch_policy",
                    format!("unknown policy `{other}` (none, permanent-until-reset)"),
                ))
            }
        };

        let s = &raw.stimulus;
        let stimulus = match need(&s.mode, "stimulus.mode")?.as_str() {
            "none" => StimulusConfig::None,
            "periodic" => StimulusConfig::Periodic {
                rate: need(&s.rate_hz, "stimulus.rate_hz")?,
                mu: need(&s.mu, "stimulus.mu")?,
            },
            "double-pulse" => StimulusConfig::DoublePulse {
                separation: need(&s.separation_s, "stimulus.separation_s")?,
                window: need(&s.window_s, "stimulus.window_s")?,
                mu: need(&s.mu, "stimulus.mu")?,
            },
            other => {
                return Err(invalid(
                    "stimulus.mode",
                    format!("unknown mode `{other}` (none, periodic, double-pulse)"),
                ))
            }
        };
        stimulus.validate().map_err(|e| invalid("stimulus", e.to_string()))?;

        let duration = need(&raw.run.duration_s, "run.duration_s")?;
        if !(duration >= 0.0 && duration.is_finite()) {
            return Err(invalid("run.duration_s", format!("must be >= 0, got {duration}")));
        }
        let config = Self {
            preset: raw.preset,
            circuit,
            rates,
            kernel,
            shunt_enabled: need(&d.shunt_enabled, "detector.shunt_enabled")?,
            latch_policy,
            stimulus,
            duration,
            seed: need(&raw.run.seed, "run.seed")?,
            output: raw.run.output,
        };
        config.build_kernel()?;
        Ok(config)
    }

    pub fn build_kernel(&self) -> Result<PerturbationKernel, ConfigError> {
        build_kernel(&self.kernel, &self.circuit).map_err(|e| invalid("kernel", e.to_string()))
    }

    pub fn model(&self) -> Result<DetectorModel, ConfigError> {
        let model = DetectorModel {
            circuit: self.circuit,
            rates: self.rates,
            kernel: self.build_kernel()?,
            shunt_enabled: self.shunt_enabled,
            latch_policy: self.latch_policy,
        };
        model.validate()?;
        Ok(model)
    }
}

/// Filtered load pulse of a click at `t = 0`, long enough to cut a kernel from.
pub fn kernel_source_pulse(
    circuit: &CircuitParams,
    passband: FilterSpec,
) -> Result<crate::circuit::Waveform, crate::circuit::CircuitError> {
    let dt = SampleGrid::DEFAULT_SAMPLE_PERIOD.min(circuit.max_sample_period());
    let grid = SampleGrid::new(dt, MAX_KERNEL_DURATION);
    ReadoutChain { passband }.filtered_load_pulse(circuit, grid)
}

pub fn build_kernel(
    spec: &KernelSpec,
    circuit: &CircuitParams,
) -> Result<PerturbationKernel, crate::circuit::CircuitError> {
    match *spec {
        KernelSpec::None => Ok(PerturbationKernel::zero()),
        KernelSpec::Parametric {
            amplitude,
            center,
            width,
        } => bias_perturbation_kernel(
            None,
            &KernelMode::Parametric {
                amplitude,
                center,
                width,
            },
        ),
        KernelSpec::FromFilter {
            passband,
            coupling,
            time_offset,
            amplitude,
            center,
        } => {
            let mode = match (coupling, time_offset) {
                (Some(coupling), Some(time_offset)) => KernelMode::FromFilter {
                    coupling,
                    time_offset,
                },
                _ => {
                    let reference =
                        kernel_source_pulse(circuit, ReadoutChain::narrow_band().passband)?;
                    let calibrated =
                        KernelMode::calibrated_from_filter(&reference, amplitude, center)?;
                    match calibrated {
                        KernelMode::FromFilter {
                            coupling: c,
                            time_offset: t,
                        } => KernelMode::FromFilter {
                            coupling: coupling.unwrap_or(c),
                            time_offset: time_offset.unwrap_or(t),
                        },
                        other => other,
                    }
                }
            };
            let pulse = kernel_source_pulse(circuit, passband)?;
            bias_perturbation_kernel(Some(&pulse), &mode)
        }
    }
}

/// Seed precedence: command-line flag, then [`SEED_ENV`], then the config.
pub fn resolve_seed(
    flag: Option<u64>,
    env: Option<&str>,
    configured: u64,
) -> Result<u64, ConfigError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match env {
        Some(text) => text
            .trim()
            .parse()
            .map_err(|_| invalid(SEED_ENV, format!("not an unsigned integer: `{text}`"))),
        None => Ok(configured),
    }
}
