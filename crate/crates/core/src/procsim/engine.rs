//! Thinning engine.
//!
//! Dark counts: candidates from a homogeneous Poisson process at a bound `B`
//! over short segments, each accepted with probability `rate(I_eff)/B`. The
//! bound of a segment is the dark rate at (recovered current at the segment
//! end) + (sum of each running kernel's maximum over the segment), which is
//! valid because the recovery is increasing and the rate law is monotone.
//! Segment lengths adapt so that `B · length` stays small; once the last click
//! is older than [`DetectorModel::quiet_after`] the rate is constant and a
//! single unbounded segment is used.
//!
//! Laser pulses: each pulse spends `mu · eta(I_eff)` of a unit-exponential
//! budget drawn from its own generator, and a click happens when the budget
//! runs out. This is exactly `P(click) = 1 - exp(-mu · eta)` per pulse, and a
//! run with `mu = 0` consumes the dark generator identically to a dark run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::circuit::kernel::KernelEnvelope;
use crate::{ps_to_seconds, seconds_to_ps, Picos};

use super::{
    make_stimulus, run_digest, DetectorModel, ProcsimError, StimulusConfig, StreamMetadata,
    TimeTagStream,
};

const MIN_SEGMENT: f64 = 0.5e-9;
const MAX_SEGMENT: f64 = 1e-6;
/// Expected bound candidates per segment above which the segment is halved.
const CANDIDATES_PER_SEGMENT: f64 = 0.05;
/// Resolution of the latch search inside a segment.
const LATCH_STEP: f64 = 0.1e-9;

const DARK_STREAM: u64 = 0;
const PHOTON_STREAM: u64 = 1;

/// Runs one detector for `duration` seconds.
pub fn simulate(
    model: &DetectorModel,
    stimulus: &StimulusConfig,
    duration: f64,
    seed: u64,
) -> Result<TimeTagStream, ProcsimError> {
    model.validate()?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(ProcsimError::Config(format!(
            "duration must be >= 0 s, got {duration}"
        )));
    }
    if model.circuit.hotspot_duration < 1e-12 {
        return Err(ProcsimError::Config(
            "hotspot_duration must be at least 1 ps so timestamps stay distinct".into(),
        ));
    }
    let pulses = make_stimulus(stimulus, duration)?;
    let sync_events = stimulus.sync_times(duration)?;
    let mut engine = Engine::new(model, stimulus.mu());
    let detector_events = engine.run(&pulses, duration, seed)?;
    Ok(TimeTagStream {
        detector_events,
        sync_events,
        duration: seconds_to_ps(duration),
        metadata: StreamMetadata {
            seed,
            digest: run_digest(model, stimulus, duration),
        },
    })
}

struct Engine<'a> {
    model: &'a DetectorModel,
    envelope: KernelEnvelope,
    mu: f64,
    hotspot: f64,
    quiet_after: f64,
    kernel_span: f64,
    quiet_rate: f64,
    quiet_spend: f64,
    can_latch: bool,
    /// Clicks whose kernel may still run; `recent[start..]` is live.
    recent: Vec<f64>,
    start: usize,
    segment_len: f64,
}

struct Segment {
    end: f64,
    bound: f64,
    latch_at: Option<f64>,
}

impl<'a> Engine<'a> {
    fn new(model: &'a DetectorModel, mu: f64) -> Self {
        let ib = model.circuit.bias_current;
        Self {
            model,
            envelope: model.kernel.envelope(),
            mu,
            hotspot: model.circuit.hotspot_duration,
            quiet_after: model.quiet_after(),
            kernel_span: model.kernel.duration(),
            quiet_rate: model.rates.dark_rate(ib),
            quiet_spend: mu * model.rates.efficiency(ib),
            can_latch: model.can_latch(),
            recent: Vec::new(),
            start: 0,
            segment_len: MIN_SEGMENT,
        }
    }

    fn live(&self) -> &[f64] {
        &self.recent[self.start..]
    }

    fn last_click(&self) -> Option<f64> {
        self.recent.last().copied()
    }

    fn push_click(&mut self, t: f64) {
        self.recent.push(t);
        while self.start + 1 < self.recent.len() && t - self.recent[self.start] >= self.kernel_span {
            self.start += 1;
        }
        if self.start > 4096 {
            self.recent.drain(..self.start);
            self.start = 0;
        }
        self.segment_len = MIN_SEGMENT;
    }

    fn bias(&self, t: f64) -> f64 {
        self.model.effective_bias(t, self.live())
    }

    fn run(&mut self, pulses: &[Picos], end: f64, seed: u64) -> Result<Vec<Picos>, ProcsimError> {
        let mut dark = ChaCha8Rng::seed_from_u64(seed);
        dark.set_stream(DARK_STREAM);
        let mut photon = ChaCha8Rng::seed_from_u64(seed);
        photon.set_stream(PHOTON_STREAM);

        let mut events = Vec::new();
        let mut budget: f64 = photon.sample(Exp1);
        let mut next_pulse = 0;
        let mut t = 0.0;
        'run: while t < end {
            let seg = self.segment(t);
            let seg_end = seg.end.min(end);
            let candidate = if seg.bound > 0.0 {
                t + dark.sample::<f64, _>(Exp1) / seg.bound
            } else {
                f64::INFINITY
            };
            let stop = candidate.min(seg_end);

            while let Some(&p) = pulses.get(next_pulse) {
                let s = ps_to_seconds(p);
                if s >= stop {
                    break;
                }
                next_pulse += 1;
                if self.mu == 0.0 {
                    continue;
                }
                budget -= self.photon_spend(s);
                if budget <= 0.0 {
                    budget = photon.sample(Exp1);
                    events.push(seconds_to_ps(s));
                    self.push_click(s);
                    t = s;
                    continue 'run;
                }
            }

            if candidate < seg_end {
                t = candidate;
                let rate = self.model.rates.dark_rate(self.bias(t));
                let ratio = rate / seg.bound;
                if ratio > 1.0 + 1e-9 {
                    return Err(ProcsimError::BoundExceeded { time: t, ratio });
                }
                if dark.random::<f64>() < ratio {
                    events.push(seconds_to_ps(t));
                    self.push_click(t);
                }
                continue;
            }
            if seg.latch_at.is_some_and(|tl| tl < end) {
                // the wire stays normal: no detector events for the rest of the run
                break;
            }
            t = seg_end;
        }
        Ok(events)
    }

    /// Budget spent by a pulse at `s`.
    fn photon_spend(&self, s: f64) -> f64 {
        match self.last_click() {
            Some(c) if s <= c + self.hotspot => 0.0,
            Some(c) if s < c + self.quiet_after => {
                self.mu * self.model.rates.efficiency(self.bias(s))
            }
            _ => self.quiet_spend,
        }
    }

    fn segment(&mut self, t: f64) -> Segment {
        let quiet = Segment {
            end: f64::INFINITY,
            bound: self.quiet_rate,
            latch_at: None,
        };
        let Some(c) = self.last_click() else {
            return quiet;
        };
        if t < c + self.hotspot {
            return Segment {
                end: c + self.hotspot,
                bound: 0.0,
                latch_at: None,
            };
        }
        let horizon = c + self.quiet_after;
        if t >= horizon {
            return quiet;
        }
        loop {
            let b = (t + self.segment_len).min(horizon);
            let mut current = self.model.circuit.current_after_click(b - c);
            for &tj in self.live() {
                current += self.envelope.max_over(t - tj, b - tj);
            }
            let bound = self.model.rates.dark_rate(current);
            if bound * (b - t) > CANDIDATES_PER_SEGMENT && self.segment_len > MIN_SEGMENT {
                self.segment_len = (self.segment_len / 2.0).max(MIN_SEGMENT);
                continue;
            }
            let latch_at = if self.can_latch && current >= self.model.circuit.critical_current {
                self.find_latch(t, b)
            } else {
                None
            };
            self.segment_len = (self.segment_len * 2.0).min(MAX_SEGMENT);
            return Segment {
                end: latch_at.unwrap_or(b),
                bound,
                latch_at,
            };
        }
    }

    /// First time in `[a, b]` (at [`LATCH_STEP`] resolution) where the
    /// effective bias reaches the critical current.
    fn find_latch(&self, a: f64, b: f64) -> Option<f64> {
        let ic = self.model.circuit.critical_current;
        let steps = ((b - a) / LATCH_STEP).ceil().max(1.0) as usize;
        (0..=steps)
            .map(|k| (a + k as f64 * LATCH_STEP).min(b))
            .find(|&u| self.bias(u) >= ic)
    }
}
