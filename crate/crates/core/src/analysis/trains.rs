use crate::Picos;

/// Longest train length with its own bucket; longer trains share the last.
pub const MAX_TRAIN_BUCKET: usize = 6;

/// Disjoint afterpulse-train length counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainDistribution {
    /// `counts[n - 1]` trains of exactly `n` clicks for `n < 6`;
    /// `counts[5]` trains of six or more.
    pub counts: [u64; MAX_TRAIN_BUCKET],
    /// Clicks inside the "6 or more" trains.
    pub overflow_events: u64,
    /// Gap that keeps a train going, picoseconds.
    pub window: Picos,
}

impl TrainDistribution {
    /// Trains of length `n` (`n >= 6` means "6 or more").
    pub fn count(&self, n: usize) -> u64 {
        assert!(n >= 1, "train lengths start at 1");
        self.counts[n.min(MAX_TRAIN_BUCKET) - 1]
    }

    pub fn trains(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Clicks accounted for, expanding the overflow bucket.
    pub fn events(&self) -> u64 {
        (1..MAX_TRAIN_BUCKET as u64)
            .map(|n| n * self.counts[n as usize - 1])
            .sum::<u64>()
            + self.overflow_events
    }

    /// `count(2) / count(1)`, the single-afterpulse branching ratio.
    pub fn ratio_2_to_1(&self) -> Option<f64> {
        (self.counts[0] > 0).then(|| self.counts[1] as f64 / self.counts[0] as f64)
    }
}

/// Greedy left-to-right grouping: a train continues while the next click is
/// strictly less than `gap` after the train's last click.
pub fn classify_trains(events: &[Picos], gap: Picos) -> TrainDistribution {
    let mut d = TrainDistribution {
        counts: [0; MAX_TRAIN_BUCKET],
        overflow_events: 0,
        window: gap,
    };
    let mut close = |n: u64| {
        if n as usize >= MAX_TRAIN_BUCKET {
            d.counts[MAX_TRAIN_BUCKET - 1] += 1;
            d.overflow_events += n;
        } else {
            d.counts[n as usize - 1] += 1;
        }
    };
    let mut length = 0u64;
    let mut last: Option<Picos> = None;
    for &t in events {
        match last {
            Some(prev) if t - prev < gap => length += 1,
            Some(_) => {
                close(length);
                length = 1;
            }
            None => length = 1,
        }
        last = Some(t);
    }
    if length > 0 {
        close(length);
    }
    d
}
