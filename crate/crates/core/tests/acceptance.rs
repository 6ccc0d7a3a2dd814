//! Acceptance run: one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Presets run with the profile's master seed; runtime limits are measured
//! here, on whatever machine runs the suite.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snspd::analysis::{
    afterpulse_probability, classify_trains, conditional_histogram, corrected_dcr, count_within,
    interarrival_histogram, Acceptance,
};
use snspd::circuit::{butterworth_bandpass_magnitude, design_bandpass, CircuitParams, ReadoutChain, SampleGrid};
use snspd::config::RunConfig;
use snspd::figures::{reproduce, FigureId, FigureOutput};
use snspd::procsim::TimeTagStream;

const FILTER_TOLERANCE_DB: f64 = 0.2;
const RECOVERY_RELATIVE: f64 = 1e-6;
const ORACLE_EVENTS: usize = 100_000;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

/// Runs presets once and keeps their outputs for the reproducibility rerun.
struct Presets {
    seed: u64,
    runs: BTreeMap<FigureId, FigureOutput>,
}

impl Presets {
    fn get(&mut self, id: FigureId) -> Result<&FigureOutput, String> {
        if !self.runs.contains_key(&id) {
            let out = reproduce(id, self.seed).map_err(|e| format!("{id}: {e}"))?;
            self.runs.insert(id, out);
        }
        Ok(&self.runs[&id])
    }

    /// Verdict over the named checks of one preset (all checks if empty).
    fn checks(&mut self, id: FigureId, names: &[&str]) -> Verdict {
        let out = match self.get(id) {
            Ok(out) => out,
            Err(e) => return Verdict::new(false, e),
        };
        let picked: Vec<_> = if names.is_empty() {
            out.checks.iter().collect()
        } else {
            names
                .iter()
                .map(|n| out.check_named(n).unwrap_or_else(|| panic!("{id} has no check {n}")))
                .collect()
        };
        let detail = picked
            .iter()
            .map(|c| format!("{}{}: {}", if c.passed { "" } else { "!" }, c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Verdict::new(picked.iter().all(|c| c.passed), detail)
    }
}

fn c1() -> Verdict {
    let p = CircuitParams::default();
    let tau = p.recovery_time_constant();
    let fall = p.fall_time_constant();
    let tau_ok = (tau - 20e-9).abs() <= 1e-12 * 20e-9;
    let fall_ok = (fall - 0.0995e-9).abs() <= 1e-3 * 0.0995e-9;
    let (start, later) = match (
        p.nanowire_current(p.hotspot_duration),
        p.nanowire_current(p.hotspot_duration + 3.0 * tau),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Verdict::new(false, "nanowire_current failed"),
    };
    // fraction of the hotspot-end deficit restored after 3τ
    let recovered = (later - start) / (p.bias_current - start);
    let want = 1.0 - (-3.0f64).exp();
    let rel = ((recovered - want) / want).abs();
    Verdict::new(
        tau_ok && fall_ok && rel < RECOVERY_RELATIVE,
        format!(
            "τ = {:.4} ns, fall = {:.5} ns, recovered {:.7} vs {want:.7} (rel {rel:.1e}); i = {:.4} I_b",
            tau * 1e9,
            fall * 1e9,
            recovered,
            later / p.bias_current
        ),
    )
}

fn c2(presets: &mut Presets) -> Verdict {
    let spec = ReadoutChain::narrow_band().passband;
    let dt = SampleGrid::DEFAULT_SAMPLE_PERIOD;
    let sos = match design_bandpass(&spec, dt) {
        Ok(s) => s,
        Err(e) => return Verdict::new(false, e.to_string()),
    };
    let db = |x: f64| 20.0 * x.log10();
    let (mut worst_digital, mut worst_analog) = (0.0f64, 0.0f64);
    let mut f = spec.passband_low / 2.0;
    let top = (2.0 * spec.passband_high).min(0.45 / dt);
    while f <= top {
        let got = sos.magnitude_db(f);
        worst_digital = worst_digital.max((got - db(butterworth_bandpass_magnitude(&spec, f, Some(dt)))).abs());
        worst_analog = worst_analog.max((got - db(butterworth_bandpass_magnitude(&spec, f, None))).abs());
        f *= 1.07;
    }
    let overshoot = presets.checks(FigureId::FigA2, &["overshoot"]);
    Verdict::new(
        worst_digital <= FILTER_TOLERANCE_DB && worst_analog <= FILTER_TOLERANCE_DB && overshoot.passed,
        format!(
            "{} sections; worst deviation {worst_digital:.2e} dB vs bilinear analytic, {worst_analog:.3} dB vs \
             continuous, over [{:.1}, {:.0}] MHz; {}",
            sos.sections().len(),
            spec.passband_low / 2e6,
            top / 1e6,
            overshoot.detail
        ),
    )
}

/// Mismatches between the streaming analyses and the brute-force references.
fn oracle_mismatches(events: &[u64]) -> Vec<String> {
    let gaps = brute_predecessor_gaps(events);
    let mut bad = Vec::new();
    for (bin, max) in [(100 * US, 20_000 * US), (4 * NS, 2 * US), (7 * NS, 999 * NS)] {
        let h = interarrival_histogram(events, bin, max);
        if (h.counts.clone(), h.total_events) != brute_interarrival(&gaps, bin, max) {
            bad.push(format!("interarrival bin {bin}"));
        }
    }
    for window in [US, 180 * NS, 1] {
        let brute = gaps.iter().flatten().filter(|&&g| g < window).count() as u64;
        if count_within(events, window) != brute {
            bad.push(format!("count_within {window}"));
        }
        let p = afterpulse_probability(events, window).unwrap();
        if p != brute as f64 / events.len() as f64 {
            bad.push(format!("afterpulse {window}"));
        }
        let d = corrected_dcr(events, 1.0, window).unwrap();
        if d.total_events - d.corrected_events != brute
            || (d.corrected_fraction() - (1.0 - p)).abs() > 2.0 * f64::EPSILON
        {
            bad.push(format!("identity {window}"));
        }
        let t = classify_trains(events, window);
        if (t.counts, t.overflow_events) != brute_trains(&gaps, window) {
            bad.push(format!("trains {window}"));
        }
    }
    bad
}

fn c11() -> Verdict {
    let mut bad = Vec::new();
    for seed in [1, 2] {
        bad.extend(oracle_mismatches(&random_events(ORACLE_EVENTS, seed)));
    }
    // conditional: a laser-like click at some syncs plus random background
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let period = 2 * US;
    let syncs: Vec<u64> = (0..5_000).map(|k| k * period).collect();
    let mut det = Vec::new();
    for &s in &syncs {
        if rng.random_bool(0.4) {
            det.push(s + rng.random_range(0..6 * NS));
        }
        for _ in 0..rng.random_range(0..4) {
            det.push(s + rng.random_range(0..period));
        }
    }
    det.sort_unstable();
    det.dedup();
    let stream = TimeTagStream {
        detector_events: det,
        duration: syncs.len() as u64 * period,
        sync_events: syncs,
        ..Default::default()
    };
    for (bin, acc) in [(20 * NS, 20 * NS), (4 * NS, 4 * NS), (3 * NS, 5 * NS)] {
        let c = conditional_histogram(&stream, period, bin, Acceptance::at_sync(acc)).unwrap();
        if (c.histogram.counts, c.conditioned_windows) != brute_conditional(&stream, period, bin, acc) {
            bad.push(format!("conditional bin {bin}"));
        }
    }
    Verdict::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!("2 × {ORACLE_EVENTS} events: histograms, afterpulse, corrected DCR, trains, conditional all exact")
        } else {
            format!("mismatches: {}", bad.join(", "))
        },
    )
}

fn c12(presets: &mut Presets) -> Verdict {
    let mut differing = Vec::new();
    let mut files = 0;
    for id in FigureId::ALL {
        let first = match presets.get(id) {
            Ok(out) => out.files.clone(),
            Err(e) => return Verdict::new(false, e),
        };
        let second = match reproduce(id, presets.seed) {
            Ok(out) => out.files,
            Err(e) => return Verdict::new(false, format!("{id}: {e}")),
        };
        files += first.len();
        if first.is_empty() || first != second {
            differing.push(id.to_string());
        }
    }
    Verdict::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} presets, {files} CSV files byte-identical on rerun", FigureId::ALL.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let mut presets = Presets {
        seed: RunConfig::default_profile().seed,
        runs: BTreeMap::new(),
    };
    println!("acceptance run, master seed {}", presets.seed);
    type Criterion<'a> = (&'a str, &'a str, Option<Duration>, Box<dyn Fn(&mut Presets) -> Verdict>);
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria: Vec<Criterion> = vec![
        ("C1", "circuit time constants", secs(1), Box::new(|_| c1())),
        ("C2", "filter response and overshoot", secs(1), Box::new(c2)),
        ("C3", "null-model exponentiality", secs(10), Box::new(|p| p.checks(FigureId::Fig3, &["fit-rate", "first-bin-consistent", "ks-exponential"]))),
        ("C4", "afterpulse peak", secs(60), Box::new(|p| p.checks(FigureId::Fig4, &[]))),
        ("C5", "corrected dark count rate", secs(120), Box::new(|p| p.checks(FigureId::Fig5, &[]))),
        ("C6", "exponential afterpulse trend", None, Box::new(|p| p.checks(FigureId::Fig6, &[]))),
        ("C7", "train statistics", None, Box::new(|p| {
            let a = p.checks(FigureId::Fig7, &["geometric-law"]);
            let b = p.checks(FigureId::Fig8, &[]);
            Verdict::new(a.passed && b.passed, format!("{}; {}", a.detail, b.detail))
        })),
        ("C8", "conditional histogram", secs(300), Box::new(|p| p.checks(FigureId::Fig9, &[]))),
        ("C9", "recovery curve", None, Box::new(|p| p.checks(FigureId::Fig10, &[]))),
        ("C10", "amplifier swap", None, Box::new(|p| p.checks(FigureId::Fig11, &[]))),
        ("C11", "oracle equivalence", None, Box::new(|_| c11())),
        ("C12", "reproducibility", None, Box::new(c12)),
    ];
    let mut failed = 0;
    for (tag, name, limit, run) in &criteria {
        let start = Instant::now();
        let mut v = run(&mut presets);
        let took = start.elapsed();
        if let Some(limit) = limit {
            if took > *limit {
                v.passed = false;
                v.detail.push_str(&format!("; over the {limit:?} limit"));
            }
        }
        failed += !v.passed as usize;
        let mark = if v.passed { "PASS" } else { "FAIL" };
        println!("[{mark}] {tag} {name} ({:.2} s): {}", took.as_secs_f64(), v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
