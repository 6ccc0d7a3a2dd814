use crate::Picos;

use super::AnalysisError;

/// Number of events whose predecessor is strictly less than `window` earlier.
pub fn count_within(events: &[Picos], window: Picos) -> u64 {
    events.windows(2).filter(|w| w[1] - w[0] < window).count() as u64
}

/// Fraction of all events that follow their predecessor within `window`.
pub fn afterpulse_probability(events: &[Picos], window: Picos) -> Result<f64, AnalysisError> {
    if events.is_empty() {
        return Err(AnalysisError::EmptyStream);
    }
    Ok(count_within(events, window) as f64 / events.len() as f64)
}

/// Total and afterpulse-corrected dark counts of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcrEstimate {
    pub total_events: u64,
    /// Events not within the window of their predecessor.
    pub corrected_events: u64,
    pub duration: f64,
}

impl DcrEstimate {
    pub fn total_rate(&self) -> f64 {
        self.total_events as f64 / self.duration
    }

    pub fn corrected_rate(&self) -> f64 {
        self.corrected_events as f64 / self.duration
    }

    /// `corrected / total`, computed from the counts.
    pub fn corrected_fraction(&self) -> f64 {
        self.corrected_events as f64 / self.total_events as f64
    }

    /// `|corrected - total| / total`.
    pub fn relative_difference(&self) -> f64 {
        (self.total_events - self.corrected_events) as f64 / self.total_events as f64
    }
}

pub fn corrected_dcr(
    events: &[Picos],
    duration: f64,
    window: Picos,
) -> Result<DcrEstimate, AnalysisError> {
    if !(duration > 0.0) {
        return Err(AnalysisError::Config(format!(
            "duration must be > 0 s, got {duration}"
        )));
    }
    let total = events.len() as u64;
    Ok(DcrEstimate {
        total_events: total,
        corrected_events: total - count_within(events, window),
        duration,
    })
}
