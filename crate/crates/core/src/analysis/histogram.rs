use crate::{ps_to_seconds, Picos};

/// Binned counts. Bin `k` covers `[origin + k·w, origin + (k+1)·w)` picoseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bin_width: Picos,
    pub origin: i64,
    pub counts: Vec<u64>,
    /// Values offered to the histogram, including those outside its range.
    pub total_events: u64,
}

impl Histogram {
    /// Empty histogram covering `[origin, origin + bins · bin_width)`.
    pub fn new(bin_width: Picos, origin: i64, bins: usize) -> Self {
        assert!(bin_width > 0, "bin width must be positive");
        Self {
            bin_width,
            origin,
            counts: vec![0; bins],
            total_events: 0,
        }
    }

    /// Counts `value` (picoseconds); values outside the range only raise
    /// `total_events`.
    pub fn add(&mut self, value: i64) {
        self.total_events += 1;
        if let Some(k) = self.bin_index(value) {
            self.counts[k] += 1;
        }
    }

    pub fn bin_index(&self, value: i64) -> Option<usize> {
        let offset = value.checked_sub(self.origin)?;
        if offset < 0 {
            return None;
        }
        let k = (offset as u64 / self.bin_width) as usize;
        (k < self.counts.len()).then_some(k)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_width_seconds(&self) -> f64 {
        ps_to_seconds(self.bin_width)
    }

    pub fn bin_start_seconds(&self, k: usize) -> f64 {
        (self.origin as f64 + (k as u64 * self.bin_width) as f64) / crate::PS_PER_S
    }

    pub fn bin_center_seconds(&self, k: usize) -> f64 {
        self.bin_start_seconds(k) + 0.5 * self.bin_width_seconds()
    }

    pub fn binned(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the largest count among bins `range` (first one on ties).
    pub fn peak_in(&self, range: std::ops::Range<usize>) -> Option<usize> {
        let range = range.start.min(self.len())..range.end.min(self.len());
        range
            .clone()
            .zip(&self.counts[range])
            .fold(None, |best: Option<(usize, u64)>, (k, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((k, c)),
            })
            .map(|(k, _)| k)
    }
}

/// Histogram of gaps between consecutive events, `ceil(max_time / bin_width)`
/// bins from zero. Gaps of `max_time` or more add to `total_events` only.
pub fn interarrival_histogram(events: &[Picos], bin_width: Picos, max_time: Picos) -> Histogram {
    let bins = max_time.div_ceil(bin_width) as usize;
    let mut h = Histogram::new(bin_width, 0, bins);
    for w in events.windows(2) {
        let gap = w[1] - w[0];
        h.total_events += 1;
        if gap < max_time {
            if let Some(k) = h.bin_index(gap as i64) {
                h.counts[k] += 1;
            }
        }
    }
    h
}
