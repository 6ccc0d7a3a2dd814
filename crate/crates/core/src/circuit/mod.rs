//! Lumped circuit model of the nanowire and its readout.
//!
//! After a click the nanowire current first falls toward the resistive-branch
//! value with the fast constant `L_k/(R_n+R_L)`, then recovers toward the bias
//! with `L_k/R_L`. The load sees the diverted current; the amplifier chain is an
//! ideal gain behind a band-pass whose poor low-frequency response produces the
//! overshoot that [`kernel`] turns into a bias perturbation.

mod discriminate;
mod filter;
pub mod kernel;
mod params;
mod waveform;

pub use discriminate::discriminate;
pub use filter::{
    apply_filter, butterworth_bandpass_magnitude, design_bandpass, Biquad, FilterSpec, SosCascade,
};
pub use kernel::{bias_perturbation_kernel, KernelMode, PerturbationKernel};
pub use params::{CircuitParams, ReadoutChain, SampleGrid};
pub use waveform::Waveform;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("time since click must be non-negative, got {0} s")]
    NegativeTime(f64),
    #[error("invalid circuit parameter `{name}`: {value} (must be > 0)")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("sample period {actual:e} s does not resolve the fall time; need <= {required:e} s")]
    UnderResolved { actual: f64, required: f64 },
    #[error("filter configuration: {0}")]
    Filter(String),
    #[error("kernel configuration: {0}")]
    Kernel(String),
    #[error("waveform: {0}")]
    Waveform(String),
}
