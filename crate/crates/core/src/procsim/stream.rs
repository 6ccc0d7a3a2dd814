use sha2::{Digest, Sha256};

use crate::Picos;

use super::{DetectorModel, LatchPolicy, StimulusConfig};

/// Provenance of a stream: the seed and a SHA-256 digest of everything else
/// that determined it (model, stimulus, duration).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StreamMetadata {
    pub seed: u64,
    pub digest: [u8; 32],
}

impl StreamMetadata {
    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest)
    }
}

/// Detector and sync timestamps in integer picoseconds.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TimeTagStream {
    pub detector_events: Vec<Picos>,
    pub sync_events: Vec<Picos>,
    pub duration: Picos,
    pub metadata: StreamMetadata,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamViolation {
    pub channel: u8,
    /// Index within the channel of the first offending timestamp.
    pub index: usize,
    pub reason: &'static str,
}

impl TimeTagStream {
    /// Checks that both channels are strictly increasing and inside
    /// `[0, duration]`.
    pub fn check(&self) -> Result<(), StreamViolation> {
        for (channel, events) in [(0u8, &self.detector_events), (1u8, &self.sync_events)] {
            for (index, w) in events.windows(2).enumerate() {
                if w[1] <= w[0] {
                    return Err(StreamViolation {
                        channel,
                        index: index + 1,
                        reason: "timestamps not strictly increasing",
                    });
                }
            }
            if let Some(index) = events.iter().position(|&t| t > self.duration) {
                return Err(StreamViolation {
                    channel,
                    index,
                    reason: "timestamp after end of run",
                });
            }
        }
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        if self.duration == 0 {
            0.0
        } else {
            self.detector_events.len() as f64 / crate::ps_to_seconds(self.duration)
        }
    }
}

/// Canonical digest of a simulation's inputs other than the seed.
pub fn run_digest(model: &DetectorModel, stimulus: &StimulusConfig, duration: f64) -> [u8; 32] {
    let mut h = Sha256::new();
    let mut put = |label: &str, v: f64| {
        h.update(label.as_bytes());
        h.update(v.to_bits().to_le_bytes());
    };
    let c = &model.circuit;
    put("circuit.kinetic_inductance", c.kinetic_inductance);
    put("circuit.hotspot_resistance", c.hotspot_resistance);
    put("circuit.load_resistance", c.load_resistance);
    put("circuit.bias_current", c.bias_current);
    put("circuit.critical_current", c.critical_current);
    put("circuit.amplifier_gain_db", c.amplifier_gain_db);
    put("circuit.hotspot_duration", c.hotspot_duration);
    let r = &model.rates;
    put("rates.dark_rate_ref", r.dark_rate_ref);
    put("rates.dark_rate_slope", r.dark_rate_slope);
    put("rates.efficiency_max", r.efficiency_max);
    put("rates.efficiency_slope", r.efficiency_slope);
    put("rates.reference_bias", r.reference_bias);
    put("kernel.sample_period", model.kernel.sample_period());
    put("kernel.len", model.kernel.samples().len() as f64);
    for &v in model.kernel.samples() {
        put("k", v);
    }
    put("detector.shunt", f64::from(u8::from(model.shunt_enabled)));
    put(
        "detector.latch",
        match model.latch_policy {
            LatchPolicy::None => 0.0,
            LatchPolicy::PermanentUntilReset => 1.0,
        },
    );
    match *stimulus {
        StimulusConfig::None => put("stimulus.none", 0.0),
        StimulusConfig::Periodic { rate, mu } => {
            put("stimulus.periodic.rate", rate);
            put("stimulus.periodic.mu", mu);
        }
        StimulusConfig::DoublePulse {
            separation,
            window,
            mu,
        } => {
            put("stimulus.double.separation", separation);
            put("stimulus.double.window", window);
            put("stimulus.double.mu", mu);
        }
    }
    put("run.duration", duration);
    h.finalize().into()
}
