//! Simulation and analysis of a superconducting nanowire single-photon
//! detector (SNSPD) chain.
//!
//! The crate is split along the detection chain:
//!
//! - [`circuit`]: lumped nanowire/readout circuit, band-pass readout filter,
//!   threshold discrimination and the post-click bias perturbation kernel.
//! - [`procsim`]: event-level point-process engine producing time-tag streams
//!   (dark counts, laser detections, dead time, afterpulsing, latching).
//! - [`analysis`]: histograms, exponential fits, afterpulse metrics, train
//!   statistics, sync-conditioned histograms and the double-pulse efficiency
//!   recovery estimator.
//! - [`timetag_io`]: binary (`NPTT`) and CSV time-tag files.
//! - [`config`]: TOML run configuration.
//! - [`figures`]: end-to-end reproduction presets with their pass/fail checks.
//!
//! Timestamps are integer picoseconds throughout; physical quantities are SI
//! `f64` values (seconds, amperes, volts, hertz).

// `!(x > 0.0)` is the intended spelling: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod circuit;
pub mod config;
pub mod export;
pub mod figures;
pub mod procsim;
pub mod stats;
pub mod timetag_io;

/// Integer picosecond timestamp.
pub type Picos = u64;

pub const PS_PER_S: f64 = 1e12;

/// Converts seconds to the nearest picosecond.
pub fn seconds_to_ps(t: f64) -> Picos {
    (t * PS_PER_S).round() as Picos
}

pub fn ps_to_seconds(t: Picos) -> f64 {
    t as f64 / PS_PER_S
}

/// Parses a time literal such as `0.1ms`, `180ns`, `4 ns` or `2e-6` (seconds).
pub fn parse_time(text: &str) -> Option<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| !(c.is_ascii_digit() || c.is_whitespace() || "+-.eE".contains(c)))
        .unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    let value: f64 = number.trim().parse().ok()?;
    let scale = match unit.trim() {
        "" | "s" => 1.0,
        "ms" => 1e-3,
        "us" | "µs" => 1e-6,
        "ns" => 1e-9,
        "ps" => 1e-12,
        _ => return None,
    };
    Some(value * scale)
}
