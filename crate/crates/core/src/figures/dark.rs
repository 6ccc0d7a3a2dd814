//! Laser-off presets: waiting-time histograms.

use rayon::prelude::*;

use crate::analysis::{fit_exponential, interarrival_histogram, ExpFit, Histogram};
use crate::circuit::{CircuitParams, FilterSpec, PerturbationKernel, ReadoutChain};
use crate::config::{build_kernel, KernelSpec, RunConfig};
use crate::export::{histogram_csv, table_csv};
use crate::procsim::TimeTagStream;
use crate::stats::ks_exponential;
use crate::{seconds_to_ps, Picos};

use super::{dark_run, Context, FigureError, FigureOutput};

/// Operating point of the afterpulse-peak figures: top of the sweep.
pub const FIG4_BIAS: f64 = 25.2e-6;

const COARSE_BIN: Picos = 100_000_000; // 0.1 ms
const COARSE_MAX: Picos = 20_000_000_000; // 20 ms
/// Tail bins below this count end the fit.
const MIN_TAIL_COUNT: u64 = 5;
const FINE_BIN: Picos = 4_000;
const FINE_MAX: Picos = 2_000_000;

const FIG3_EVENTS: f64 = 1e4;
const KS_SEEDS: u64 = 20;
const KS_REQUIRED: usize = 18;
const KS_SIGNIFICANCE: f64 = 0.01;
/// Gaps shorter than this include the recovery transient and are left out of
/// the exponentiality test.
const KS_SKIP: f64 = 1e-6;

const FIG4_EVENTS: f64 = 1e5;
const FIG11_EVENTS: f64 = 1e6;

fn coarse_fit(events: &[Picos]) -> Result<(Histogram, ExpFit), FigureError> {
    let h = interarrival_histogram(events, COARSE_BIN, COARSE_MAX);
    let fit = fit_exponential(&h, 1, MIN_TAIL_COUNT)?;
    Ok((h, fit))
}

fn fit_table(h: &Histogram, fit: &ExpFit) -> String {
    let rows: Vec<Vec<f64>> = (0..h.len())
        .map(|k| vec![h.bin_start_seconds(k), h.counts[k] as f64, fit.predict(k)])
        .collect();
    table_csv(&["bin_start_s", "count", "fit"], &rows)
}

/// Fine histogram with the coarse fit's baseline integrated over each bin.
struct Baseline {
    fine: Histogram,
    expected: Vec<f64>,
}

impl Baseline {
    fn new(events: &[Picos], fit: &ExpFit) -> Self {
        let fine = interarrival_histogram(events, FINE_BIN, FINE_MAX);
        let w = fine.bin_width_seconds();
        let expected = (0..fine.len())
            .map(|k| {
                let a = fine.bin_start_seconds(k);
                fit.expected_count(a, a + w)
            })
            .collect();
        Self { fine, expected }
    }

    fn bin(&self, t: f64) -> usize {
        (t / self.fine.bin_width_seconds()).round() as usize
    }

    fn excess_sigma(&self, k: usize) -> f64 {
        let e = self.expected[k];
        (self.fine.counts[k] as f64 - e) / e.sqrt()
    }

    fn table(&self) -> String {
        let rows: Vec<Vec<f64>> = (0..self.fine.len())
            .map(|k| {
                vec![
                    self.fine.bin_start_seconds(k),
                    self.fine.counts[k] as f64,
                    self.expected[k],
                ]
            })
            .collect();
        table_csv(&["bin_start_s", "count", "baseline"], &rows)
    }

    /// Largest `(count - baseline) / √baseline` over `[lo, hi)` seconds.
    fn worst(&self, lo: f64, hi: f64) -> (usize, f64) {
        (self.bin(lo)..self.bin(hi))
            .map(|k| (k, self.excess_sigma(k)))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }
}

fn first_bin(h: &Histogram, fit: &ExpFit) -> (u64, f64) {
    (h.counts[0], fit.predict(0))
}

fn gaps_after(events: &[Picos], skip: f64) -> Vec<f64> {
    let skip_ps = seconds_to_ps(skip);
    events
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&g| g > skip_ps)
        .map(|g| crate::ps_to_seconds(g - skip_ps))
        .collect()
}

/// Null model (kernel off): one exponential, plus the afterpulsing contrast.
pub(super) fn fig3(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let null = ctx.model.with_kernel(PerturbationKernel::zero());
    let rate = null.rates.dark_rate(null.circuit.bias_current);
    let runs: Vec<TimeTagStream> = (0..KS_SEEDS)
        .into_par_iter()
        .map(|i| dark_run(&null, FIG3_EVENTS, ctx.seed(i)))
        .collect::<Result<_, _>>()?;

    let main = &runs[0];
    let (h, fit) = coarse_fit(&main.detector_events)?;
    out.file("interarrival", histogram_csv(&h));
    out.file("fit", fit_table(&h, &fit));
    out.check(
        "fit-rate",
        (fit.rate - rate).abs() <= 3.0 * fit.rate_std_error,
        format!(
            "{} events, fitted {:.1} ± {:.1} /s vs configured {rate:.1} /s",
            main.detector_events.len(),
            fit.rate,
            fit.rate_std_error
        ),
    );
    let (obs, pred) = first_bin(&h, &fit);
    out.check(
        "first-bin-consistent",
        (obs as f64 - pred).abs() <= 3.0 * pred.sqrt(),
        format!("first bin {obs} vs extrapolated {pred:.1} (3√ = {:.1})", 3.0 * pred.sqrt()),
    );

    let ks: Vec<_> = runs
        .iter()
        .map(|r| ks_exponential(&gaps_after(&r.detector_events, KS_SKIP), rate))
        .collect();
    let passing = ks.iter().filter(|k| k.passes(KS_SIGNIFICANCE)).count();
    let rows: Vec<Vec<f64>> = ks
        .iter()
        .enumerate()
        .map(|(i, k)| vec![i as f64, k.samples as f64, k.statistic, k.p_value])
        .collect();
    out.file("ks", table_csv(&["seed_index", "samples", "statistic", "p_value"], &rows));
    out.check(
        "ks-exponential",
        passing >= KS_REQUIRED,
        format!("{passing}/{KS_SEEDS} seeds pass KS at {KS_SIGNIFICANCE} (need {KS_REQUIRED})"),
    );

    let on = dark_run(&ctx.model, FIG3_EVENTS, ctx.seed(100))?;
    let (h_on, fit_on) = coarse_fit(&on.detector_events)?;
    out.file("interarrival_afterpulsing", histogram_csv(&h_on));
    out.file("fit_afterpulsing", fit_table(&h_on, &fit_on));
    let (obs, pred) = first_bin(&h_on, &fit_on);
    out.check(
        "afterpulsing-first-bin-excess",
        obs as f64 - pred > 3.0 * pred.sqrt(),
        format!(
            "calibrated kernel: first bin {obs} vs extrapolated {pred:.1} (3√ = {:.1})",
            3.0 * pred.sqrt()
        ),
    );
    Ok(out)
}

/// Afterpulse peak in the 4 ns waiting-time histogram at high bias.
pub(super) fn fig4(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let model = ctx.model.with_bias(FIG4_BIAS);
    let stream = dark_run(&model, FIG4_EVENTS, ctx.seed(0))?;
    let (coarse, fit) = coarse_fit(&stream.detector_events)?;
    let base = Baseline::new(&stream.detector_events, &fit);
    out.file("interarrival_coarse", histogram_csv(&coarse));
    out.file("interarrival_4ns", histogram_csv(&base.fine));
    out.file("baseline", base.table());

    let peak = base
        .fine
        .peak_in(base.bin(80e-9)..base.bin(1e-6))
        .expect("non-empty range");
    let centre = base.fine.bin_center_seconds(peak);
    out.check(
        "peak-position",
        (140e-9..=220e-9).contains(&centre),
        format!("peak bin centred at {:.0} ns", centre * 1e9),
    );
    let z = base.excess_sigma(peak);
    out.check(
        "peak-significance",
        z > 5.0,
        format!(
            "{} events; peak {} vs baseline {:.2} ({z:.1}σ, need > 5)",
            stream.detector_events.len(),
            base.fine.counts[peak],
            base.expected[peak]
        ),
    );
    Ok(out)
}

/// Kernel cut from the band-limited pulse of `passband`, calibrated on the
/// narrow-band readout to the profile's amplitude and delay.
pub fn fig11_kernel(
    circuit: &CircuitParams,
    passband: FilterSpec,
) -> Result<PerturbationKernel, FigureError> {
    let KernelSpec::Parametric {
        amplitude, center, ..
    } = RunConfig::default_profile().kernel
    else {
        unreachable!("the profile ships a parametric kernel")
    };
    let spec = KernelSpec::FromFilter {
        passband,
        coupling: None,
        time_offset: None,
        amplitude,
        center,
    };
    Ok(build_kernel(&spec, circuit)?)
}

/// The wide-band amplifier: same experiment as fig4, no afterpulse peak.
pub(super) fn fig11(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let high = ctx.model.with_bias(FIG4_BIAS);
    let narrow = fig11_kernel(&high.circuit, ReadoutChain::narrow_band().passband)?;
    let wide = fig11_kernel(&high.circuit, ReadoutChain::wide_band().passband)?;
    let rows: Vec<Vec<f64>> = (0..=2000)
        .map(|k| {
            let t = k as f64 * 1e-9;
            vec![t, narrow.value(t), wide.value(t)]
        })
        .collect();
    out.file("kernels", table_csv(&["time_s", "narrow_band_a", "wide_band_a"], &rows));

    let stream = dark_run(&high.with_kernel(wide.clone()), FIG11_EVENTS, ctx.seed(0))?;
    let (coarse, fit) = coarse_fit(&stream.detector_events)?;
    let base = Baseline::new(&stream.detector_events, &fit);
    out.file("interarrival_coarse", histogram_csv(&coarse));
    out.file("interarrival_4ns", histogram_csv(&base.fine));
    out.file("baseline", base.table());
    let (k, z) = base.worst(80e-9, 500e-9);
    out.check(
        "no-afterpulse-peak",
        z <= 3.0,
        format!(
            "{} events; worst bin in [80, 500) ns at {:.0} ns: {} vs baseline {:.1} ({z:.2}σ, limit 3); wide-band kernel max {:.2e} A",
            stream.detector_events.len(),
            base.fine.bin_center_seconds(k) * 1e9,
            base.fine.counts[k],
            base.expected[k],
            wide.max_abs()
        ),
    );

    // Control: the same from-filter construction on the narrow-band readout.
    let control = dark_run(&high.with_kernel(narrow.clone()), FIG4_EVENTS, ctx.seed(1))?;
    let (_, fit) = coarse_fit(&control.detector_events)?;
    let base = Baseline::new(&control.detector_events, &fit);
    out.file("control_interarrival_4ns", histogram_csv(&base.fine));
    let (k, z) = base.worst(80e-9, 500e-9);
    out.check(
        "narrow-band-control-peak",
        z > 5.0,
        format!(
            "narrow-band kernel (max {:.2e} A): peak at {:.0} ns, {z:.1}σ above baseline",
            narrow.max_abs(),
            base.fine.bin_center_seconds(k) * 1e9
        ),
    );
    Ok(out)
}
