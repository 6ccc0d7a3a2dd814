use crate::procsim::TimeTagStream;
use crate::Picos;

use super::{AnalysisError, Histogram};

/// Where the click that defines `t = 0` must fall, relative to each sync.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Acceptance {
    pub offset: i64,
    pub width: Picos,
}

impl Acceptance {
    /// `[sync, sync + width)`.
    pub fn at_sync(width: Picos) -> Self {
        Self { offset: 0, width }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalHistogram {
    /// Detector events by time since the `t = 0` click (which lands in bin 0).
    pub histogram: Histogram,
    pub sync_windows: u64,
    /// Windows that had a `t = 0` click and were histogrammed.
    pub conditioned_windows: u64,
}

/// Sync-conditioned histogram. For each sync `s`, the `t = 0` click is the
/// first detector event in `[s + offset, s + offset + width)`; windows
/// without one are skipped. Every detector event `e` in
/// `[click, s + window)` is binned at `e - click`.
pub fn conditional_histogram(
    stream: &TimeTagStream,
    window: Picos,
    bin: Picos,
    acceptance: Acceptance,
) -> Result<ConditionalHistogram, AnalysisError> {
    if stream.sync_events.is_empty() {
        return Err(AnalysisError::Config(
            "conditional histogram needs sync events".into(),
        ));
    }
    if bin == 0 || window == 0 || acceptance.width == 0 {
        return Err(AnalysisError::Config(
            "window, bin and acceptance width must be > 0".into(),
        ));
    }
    let detector = &stream.detector_events;
    let mut h = Histogram::new(bin, 0, window.div_ceil(bin) as usize);
    let mut conditioned = 0;
    let mut cursor = 0;
    for &s in &stream.sync_events {
        let open = s as i64 + acceptance.offset;
        while cursor < detector.len() && (detector[cursor] as i64) < open {
            cursor += 1;
        }
        let Some(&click) = detector.get(cursor) else {
            continue;
        };
        if click as i64 >= open + acceptance.width as i64 {
            continue;
        }
        conditioned += 1;
        let end = s + window;
        for &e in detector[cursor..].iter().take_while(|&&e| e < end) {
            h.add((e - click) as i64);
        }
    }
    Ok(ConditionalHistogram {
        histogram: h,
        sync_windows: stream.sync_events.len() as u64,
        conditioned_windows: conditioned,
    })
}
