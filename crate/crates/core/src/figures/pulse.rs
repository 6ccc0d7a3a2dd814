//! Simulated detection pulse, with and without the readout passband.

use crate::circuit::{discriminate, ReadoutChain, SampleGrid, Waveform};

use super::{Context, FigureError, FigureOutput};

const CLICK_AT: f64 = 30e-9;
const TRACE: f64 = 400e-9;
const THRESHOLD: f64 = -0.150;
const HOLDOFF: f64 = 80e-9;
/// Order of the measured pulse depth; the simulated one must be within 2×.
const MEASURED_DEPTH: f64 = 0.300;

fn min_max(w: &Waveform) -> (f64, f64) {
    w.samples()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub(super) fn fig_a2(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let circuit = ctx.model.circuit;
    let grid = SampleGrid::new(SampleGrid::DEFAULT_SAMPLE_PERIOD, TRACE).with_click_at(CLICK_AT);
    let raw = ReadoutChain::unfiltered_output_pulse(&circuit, grid)?;
    let filtered = ReadoutChain::narrow_band().output_pulse(&circuit, grid)?;
    out.file("unfiltered", raw.to_csv_string());
    out.file("filtered", filtered.to_csv_string());

    let tau = circuit.recovery_time_constant();
    let fall = circuit.fall_time_constant();
    out.check(
        "time-constants",
        (tau - 20e-9).abs() < 1e-15 && (fall - 0.0995e-9).abs() < 1e-3 * 0.0995e-9,
        format!("τ = {:.3} ns, fall = {:.4} ns", tau * 1e9, fall * 1e9),
    );

    let th = circuit.hotspot_duration;
    let ib = circuit.bias_current;
    let start = circuit.nanowire_current(th)?;
    let later = circuit.nanowire_current(th + 3.0 * tau)?;
    let recovered = (later - start) / (ib - start);
    let want = 1.0 - (-3.0f64).exp();
    out.check(
        "recovery-3tau",
        ((recovered - want) / want).abs() < 1e-6,
        format!(
            "deficit recovered 3τ after the hotspot: {:.6} (1 - e^-3 = {want:.6}); i = {:.4} I_b",
            recovered,
            later / ib
        ),
    );

    let (raw_min, raw_max) = min_max(&raw);
    let (k_min, f_min) = filtered.peak();
    let overshoot = filtered.samples()[k_min..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    out.check(
        "overshoot",
        raw_max <= 0.0 && overshoot > 0.0,
        format!(
            "unfiltered range [{raw_min:.3}, {raw_max:.3}] V; filtered minimum {f_min:.3} V then overshoot to +{overshoot:.3} V"
        ),
    );
    out.check(
        "pulse-depth",
        (raw_min.abs() / MEASURED_DEPTH).log2().abs() <= 1.0,
        format!("unfiltered depth {:.3} V vs ~{MEASURED_DEPTH} V", raw_min.abs()),
    );
    let events = discriminate(&filtered, THRESHOLD, HOLDOFF);
    out.check(
        "single-crossing",
        events.len() == 1 && (events[0] - CLICK_AT).abs() < 5e-9,
        format!("crossings of {THRESHOLD} V: {:?} ns", events.iter().map(|t| t * 1e9).collect::<Vec<_>>()),
    );
    Ok(out)
}
