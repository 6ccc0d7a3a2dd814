//! Time-tag analyses. All inputs are integer-picosecond streams; outputs are
//! plain values that export to CSV (see [`crate::export`]).

mod afterpulse;
mod conditional;
mod fit;
mod histogram;
mod recovery;
mod trains;

pub use afterpulse::{afterpulse_probability, corrected_dcr, count_within, DcrEstimate};
pub use conditional::{conditional_histogram, Acceptance, ConditionalHistogram};
pub use fit::{fit_exponential, fit_exponential_values, ExpFit, MIN_FIT_BINS};
pub use histogram::{interarrival_histogram, Histogram};
pub use recovery::{
    recovery_curve, subtract_background, Background, Denominator, DoublePulseRun, RecoveryCurve,
    RecoveryOptions, RecoveryPoint, MAX_ACCEPTANCE_BIN,
};
pub use trains::{classify_trains, TrainDistribution, MAX_TRAIN_BUCKET};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("empty event stream")]
    EmptyStream,
    #[error("fit needs at least {needed} usable bins, got {got}")]
    InsufficientBins { needed: usize, got: usize },
    #[error("fit: {0}")]
    Fit(String),
    #[error("configuration: {0}")]
    Config(String),
}
