//! Brute-force references shared by the oracle tests and the acceptance run.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snspd::analysis::MAX_TRAIN_BUCKET;
use snspd::procsim::TimeTagStream;
use snspd::Picos;

pub const NS: Picos = 1_000;
pub const US: Picos = 1_000_000;

/// Mixture of short afterpulse-like gaps and long dark-count gaps.
pub fn random_events(n: usize, seed: u64) -> Vec<Picos> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t: Picos = rng.random_range(0..US);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(t);
        let gap = if rng.random_bool(0.3) {
            rng.random_range(1..3 * US)
        } else {
            (-(1.0 - rng.random::<f64>()).ln() * 300e6) as Picos + 1
        };
        t += gap;
    }
    out
}

/// Gap to the latest strictly earlier event, found by scanning every event.
pub fn brute_predecessor_gaps(events: &[Picos]) -> Vec<Option<Picos>> {
    events
        .iter()
        .map(|&e| {
            let latest = events.iter().fold(None, |best: Option<Picos>, &x| {
                if x < e && best.is_none_or(|b| x > b) {
                    Some(x)
                } else {
                    best
                }
            });
            latest.map(|p| e - p)
        })
        .collect()
}

pub fn brute_interarrival(gaps: &[Option<Picos>], bin: Picos, max: Picos) -> (Vec<u64>, u64) {
    let mut counts = vec![0; max.div_ceil(bin) as usize];
    let mut total = 0;
    for g in gaps.iter().flatten() {
        total += 1;
        if *g < max {
            counts[(g / bin) as usize] += 1;
        }
    }
    (counts, total)
}

/// Train lengths: a train starts at every event without a predecessor within
/// `gap` and runs up to the next start.
pub fn brute_trains(gaps: &[Option<Picos>], gap: Picos) -> ([u64; MAX_TRAIN_BUCKET], u64) {
    let mut starts: Vec<usize> = (0..gaps.len())
        .filter(|&i| gaps[i].is_none_or(|g| g >= gap))
        .collect();
    starts.push(gaps.len());
    let mut counts = [0; MAX_TRAIN_BUCKET];
    let mut overflow = 0;
    for w in starts.windows(2) {
        let n = w[1] - w[0];
        if n >= MAX_TRAIN_BUCKET {
            counts[MAX_TRAIN_BUCKET - 1] += 1;
            overflow += n as u64;
        } else {
            counts[n - 1] += 1;
        }
    }
    (counts, overflow)
}

pub fn brute_conditional(s: &TimeTagStream, window: Picos, bin: Picos, acceptance: Picos) -> (Vec<u64>, u64) {
    let mut counts = vec![0; window.div_ceil(bin) as usize];
    let mut conditioned = 0;
    for &sync in &s.sync_events {
        let Some(click) = s
            .detector_events
            .iter()
            .copied()
            .filter(|&e| e >= sync && e < sync + acceptance)
            .min()
        else {
            continue;
        };
        conditioned += 1;
        for &e in &s.detector_events {
            if e >= click && e < sync + window {
                counts[((e - click) / bin) as usize] += 1;
            }
        }
    }
    (counts, conditioned)
}
