//! Event-level point-process model of the detector.
//!
//! A [`DetectorModel`] combines the circuit recovery, bias-dependent dark-rate
//! and efficiency laws ([`RateModel`]) and the post-click bias perturbation.
//! [`simulate`] turns a model, a laser stimulus and a seed into a
//! [`TimeTagStream`]. Runs are sequential; sweeps parallelize over
//! independent seeds from [`derive_seed`].

mod engine;
mod model;
mod rates;
mod seed;
mod stimulus;
mod stream;

pub use engine::simulate;
pub use model::{detection_probability, DetectorModel, LatchPolicy};
pub use rates::RateModel;
pub use seed::derive_seed;
pub use stimulus::{make_stimulus, StimulusConfig};
pub use stream::{run_digest, StreamMetadata, StreamViolation, TimeTagStream};

use thiserror::Error;

use crate::circuit::CircuitError;

#[derive(Debug, Error, PartialEq)]
pub enum ProcsimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("internal: thinning bound exceeded at t = {time} s (rate/bound = {ratio})")]
    BoundExceeded { time: f64, ratio: f64 },
}
