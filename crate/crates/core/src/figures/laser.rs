//! Laser-on presets: sync-conditioned histogram and efficiency recovery.
//!
//! These measurements come from a different cool-down than the dark-count
//! sweep, with a lower switching current; the model is shifted accordingly.

use rayon::prelude::*;

use crate::analysis::{conditional_histogram, recovery_curve, Acceptance, DoublePulseRun, RecoveryCurve, RecoveryOptions};
use crate::circuit::PerturbationKernel;
use crate::export::{histogram_csv, recovery_csv};
use crate::procsim::{simulate, DetectorModel, StimulusConfig};
use crate::stats::poisson_consistent;
use crate::{seconds_to_ps, Picos};

use super::{Context, FigureError, FigureOutput};

const LASER_ON_CRITICAL: f64 = 24.8e-6;
/// Bias at which the laser-on day's rate laws hit their reference values.
const LASER_ON_REFERENCE: f64 = 24.5e-6;
pub const FIG9_BIAS: f64 = 24.5e-6;
pub const FIG10_BIAS: f64 = 24.4e-6;

const REP_RATE: f64 = 0.5e6;
const MU: f64 = 10.0;
const FIG9_WINDOWS: f64 = 1e6;
const FIG9_BIN: Picos = 20_000;
const PAIR_WINDOW: f64 = 2e-6;
/// First-pulse detections aimed for per separation.
const FIG10_FIRST: f64 = 5e4;
const FIG10_NULL_FIRST: f64 = 2e4;

pub fn laser_on_model(model: &DetectorModel, bias: f64) -> DetectorModel {
    let mut m = model.clone();
    m.circuit.critical_current = LASER_ON_CRITICAL;
    m.rates.reference_bias = LASER_ON_REFERENCE;
    m.with_bias(bias)
}

/// 80–400 ns every 20 ns, then to 1000 ns every 50 ns.
pub fn recovery_separations() -> Vec<f64> {
    let fine = (0..17).map(|k| (80 + 20 * k) as f64 * 1e-9);
    let coarse = (0..12).map(|k| (450 + 50 * k) as f64 * 1e-9);
    fine.chain(coarse).collect()
}

pub(super) fn fig9(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let model = laser_on_model(&ctx.model, FIG9_BIAS);
    let stimulus = StimulusConfig::Periodic { rate: REP_RATE, mu: MU };
    let duration = (FIG9_WINDOWS + 0.5) / REP_RATE;
    let stream = simulate(&model, &stimulus, duration, ctx.seed(0))?;
    let window = seconds_to_ps(1.0 / REP_RATE);
    let cond = conditional_histogram(&stream, window, FIG9_BIN, Acceptance::at_sync(FIG9_BIN))?;
    let h = &cond.histogram;
    out.file("conditional", histogram_csv(h));

    let top = h.peak_in(0..h.len()).expect("bins");
    out.check(
        "dominant-zero-bin",
        top == 0,
        format!(
            "{} windows, {} with a t = 0 click; largest bin {top} ({} counts)",
            cond.sync_windows, cond.conditioned_windows, h.counts[top]
        ),
    );
    let k80 = (80_000 / FIG9_BIN) as usize;
    let second = h.peak_in(k80..h.len()).expect("bins");
    let centre = h.bin_center_seconds(second);
    out.check(
        "secondary-peak",
        (140e-9..=220e-9).contains(&centre),
        format!("largest bin beyond 80 ns centred at {:.0} ns ({} counts)", centre * 1e9, h.counts[second]),
    );
    let (a, b) = ((1_000_000 / FIG9_BIN) as usize, (2_000_000 / FIG9_BIN) as usize);
    let observed: u64 = h.counts[a..b].iter().sum();
    // Dark clicks in the window bring their own afterpulses, so the baseline
    // is the model's long-run dark click rate, not the bare dark rate.
    let dark = model.stationary_rate();
    let expected = cond.conditioned_windows as f64 * dark * 1e-6;
    out.check(
        "dark-baseline",
        poisson_consistent(observed, expected),
        format!("[1, 2) µs after the laser click: {observed} counts vs {expected:.2} from {dark:.0} cps"),
    );
    Ok(out)
}

fn sweep_runs(model: &DetectorModel, first: f64, seed: impl Fn(u64) -> u64 + Sync) -> Result<RecoveryCurve, FigureError> {
    let p = model.nominal_detection_probability(MU);
    let duration = (first / p).ceil() * PAIR_WINDOW;
    let runs: Vec<DoublePulseRun> = recovery_separations()
        .into_par_iter()
        .enumerate()
        .map(|(i, separation)| {
            let stimulus = StimulusConfig::DoublePulse {
                separation,
                window: PAIR_WINDOW,
                mu: MU,
            };
            Ok(DoublePulseRun {
                separation: seconds_to_ps(separation),
                window: seconds_to_ps(PAIR_WINDOW),
                stream: simulate(model, &stimulus, duration, seed(i as u64))?,
            })
        })
        .collect::<Result<_, FigureError>>()?;
    Ok(recovery_curve(&runs, RecoveryOptions::default())?)
}

pub(super) fn fig10(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let model = laser_on_model(&ctx.model, FIG10_BIAS);
    let nominal = model.nominal_detection_probability(MU);

    let curve = sweep_runs(&model, FIG10_FIRST, |i| ctx.seed(i))?;
    out.file("recovery", recovery_csv(&curve));
    let pts = &curve.points;
    let (first, last) = (&pts[0], &pts[pts.len() - 1]);
    out.check(
        "dead-at-80ns",
        first.efficiency < 0.1 * nominal,
        format!(
            "η({:.0} ns) = {:.4} ± {:.4} vs 0.1·nominal = {:.4}",
            first.separation * 1e9,
            first.efficiency,
            first.stat_error,
            0.1 * nominal
        ),
    );
    let peak = pts
        .iter()
        .max_by(|a, b| a.efficiency.total_cmp(&b.efficiency))
        .expect("points");
    let joint = peak.stat_error.hypot(last.stat_error);
    out.check(
        "overshoot-peak",
        (140e-9..=220e-9).contains(&peak.separation) && peak.efficiency - last.efficiency > joint,
        format!(
            "peak η({:.0} ns) = {:.4} vs η(1000 ns) = {:.4}, difference {:.4} (3σ joint {joint:.4})",
            peak.separation * 1e9,
            peak.efficiency,
            last.efficiency,
            peak.efficiency - last.efficiency
        ),
    );
    out.check(
        "settles-to-nominal",
        (last.efficiency - nominal).abs() <= last.stat_error,
        format!(
            "η(1000 ns) = {:.4} ± {:.4} (3σ) vs nominal {nominal:.4}",
            last.efficiency, last.stat_error
        ),
    );

    let null = model.with_kernel(PerturbationKernel::zero());
    let curve = sweep_runs(&null, FIG10_NULL_FIRST, |i| ctx.seed(500 + i))?;
    out.file("recovery_kernel_off", recovery_csv(&curve));
    let pts = &curve.points;
    let over = pts
        .iter()
        .map(|p| (p.efficiency - nominal) / p.stat_error)
        .fold(f64::NEG_INFINITY, f64::max);
    let drop = pts
        .windows(2)
        .map(|w| (w[1].efficiency - w[0].efficiency) / w[0].stat_error.hypot(w[1].stat_error))
        .fold(f64::INFINITY, f64::min);
    let far_ok = pts
        .iter()
        .filter(|p| p.separation >= 500e-9)
        .all(|p| (p.efficiency - nominal).abs() <= p.stat_error);
    out.check(
        "kernel-off-null",
        over <= 1.0 && drop >= -1.0 && far_ok,
        format!(
            "kernel off: max excess over nominal {over:.2}×(3σ), largest drop {drop:.2}×(3σ joint), \
             ≥ 500 ns within 3σ of nominal: {far_ok}"
        ),
    );
    Ok(out)
}
