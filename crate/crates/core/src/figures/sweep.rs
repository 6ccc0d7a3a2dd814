//! Bias-sweep presets: corrected DCR, afterpulse probability and trains.
//! All four figures analyse the same set of runs.

use rayon::prelude::*;

use crate::analysis::{afterpulse_probability, classify_trains, corrected_dcr, DcrEstimate, TrainDistribution};
use crate::export::table_csv;
use crate::procsim::DetectorModel;
use crate::stats::{linear_regression, poisson_consistent, weighted_regression, LineFit};
use crate::{seconds_to_ps, Picos};

use super::{dark_run, Context, FigureError, FigureId, FigureOutput};

/// Clicks simulated per bias point.
const SWEEP_EVENTS: f64 = 1e5;
/// Afterpulse window and train gap.
const WINDOW: f64 = 1e-6;
/// Ratio points need this many two-click trains to be compared.
const MIN_PAIRS: u64 = 100;

/// Operating points, 23.0–25.2 µA in 0.2 µA steps.
pub fn sweep_biases() -> Vec<f64> {
    (0..12).map(|k| (23.0 + 0.2 * k as f64) * 1e-6).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub bias: f64,
    pub dcr: DcrEstimate,
    pub afterpulse: f64,
    pub trains: TrainDistribution,
    /// Configured probability that a click is followed within the window.
    pub branching: f64,
}

impl SweepPoint {
    fn events(&self) -> f64 {
        self.dcr.total_events as f64
    }

    fn afterpulse_sigma(&self) -> f64 {
        (self.afterpulse * (1.0 - self.afterpulse) / self.events()).sqrt()
    }

    fn ratio(&self) -> Option<(f64, f64)> {
        let (n1, n2) = (self.trains.count(1) as f64, self.trains.count(2) as f64);
        let r = self.trains.ratio_2_to_1()?;
        (n2 > 0.0).then(|| (r, r * (1.0 / n1 + 1.0 / n2).sqrt()))
    }
}

/// Dark runs at every bias of [`sweep_biases`], analysed with a 1 µs window.
pub fn bias_sweep(model: &DetectorModel, seed: impl Fn(u64) -> u64 + Sync) -> Result<Vec<SweepPoint>, FigureError> {
    let window: Picos = seconds_to_ps(WINDOW);
    sweep_biases()
        .into_par_iter()
        .enumerate()
        .map(|(i, bias)| {
            let m = model.with_bias(bias);
            let stream = dark_run(&m, SWEEP_EVENTS, seed(i as u64))?;
            let events = &stream.detector_events;
            Ok(SweepPoint {
                bias,
                dcr: corrected_dcr(events, crate::ps_to_seconds(stream.duration), window)?,
                afterpulse: afterpulse_probability(events, window)?,
                trains: classify_trains(events, window),
                branching: m.follow_probability(WINDOW),
            })
        })
        .collect()
}

fn sweep(ctx: &Context) -> Result<Vec<SweepPoint>, FigureError> {
    bias_sweep(&ctx.model, |i| ctx.seed_for(FigureId::Fig5, i))
}

fn bias_ua(p: &SweepPoint) -> f64 {
    p.bias * 1e6
}

/// `ln(afterpulse probability)` against bias, weighted by binomial variance.
fn afterpulse_trend(points: &[SweepPoint]) -> Option<LineFit> {
    let (x, y, w) = points
        .iter()
        .filter(|p| p.afterpulse > 0.0)
        .map(|p| {
            let var = (1.0 - p.afterpulse) / (p.events() * p.afterpulse);
            (bias_ua(p), p.afterpulse.ln(), 1.0 / var)
        })
        .fold((vec![], vec![], vec![]), |mut acc, (a, b, c)| {
            acc.0.push(a);
            acc.1.push(b);
            acc.2.push(c);
            acc
        });
    weighted_regression(&x, &y, &w)
}

fn ratio_trend(points: &[SweepPoint]) -> Option<LineFit> {
    let (mut x, mut y, mut w) = (vec![], vec![], vec![]);
    for p in points {
        if let Some((r, s)) = p.ratio() {
            x.push(bias_ua(p));
            y.push(r.ln());
            w.push((r / s).powi(2));
        }
    }
    weighted_regression(&x, &y, &w)
}

pub(super) fn fig5(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let points = sweep(ctx)?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let t = p.dcr.duration;
            vec![
                p.bias,
                p.dcr.total_rate(),
                p.dcr.corrected_rate(),
                (p.dcr.total_events as f64).sqrt() / t,
                (p.dcr.corrected_events as f64).sqrt() / t,
            ]
        })
        .collect();
    out.file(
        "dcr",
        table_csv(
            &["bias_a", "total_rate_hz", "corrected_rate_hz", "total_err_hz", "corrected_err_hz"],
            &rows,
        ),
    );
    let (low, high) = (&points[0], &points[points.len() - 1]);
    out.check(
        "low-bias-agreement",
        low.dcr.relative_difference() < 0.01,
        format!(
            "{:.1} µA: total {:.2} cps, corrected {:.2} cps, difference {:.3}% (limit 1%)",
            bias_ua(low),
            low.dcr.total_rate(),
            low.dcr.corrected_rate(),
            100.0 * low.dcr.relative_difference()
        ),
    );
    out.check(
        "high-bias-divergence",
        high.dcr.relative_difference() > 0.10,
        format!(
            "{:.1} µA: total {:.0} cps, corrected {:.0} cps, difference {:.1}% (need > 10%)",
            bias_ua(high),
            high.dcr.total_rate(),
            high.dcr.corrected_rate(),
            100.0 * high.dcr.relative_difference()
        ),
    );
    let worst = rows
        .windows(2)
        .map(|w| (w[1][2] - w[0][2]) / w[0][4].hypot(w[1][4]))
        .fold(f64::INFINITY, f64::min);
    out.check(
        "corrected-monotone",
        worst >= -3.0,
        format!("smallest step between neighbouring biases {worst:.1}σ (limit -3σ)"),
    );
    Ok(out)
}

pub(super) fn fig6(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let points = sweep(ctx)?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| vec![p.bias, p.afterpulse, p.afterpulse_sigma(), p.branching])
        .collect();
    out.file(
        "afterpulse",
        table_csv(&["bias_a", "afterpulse_probability", "err", "branching_probability"], &rows),
    );
    let x: Vec<f64> = points.iter().map(bias_ua).collect();
    let y: Vec<f64> = points.iter().map(|p| p.afterpulse.max(f64::MIN_POSITIVE).ln()).collect();
    let fit = linear_regression(&x, &y).ok_or_else(|| {
        crate::analysis::AnalysisError::Fit("degenerate afterpulse sweep".into())
    })?;
    out.check(
        "exponential-trend",
        fit.r_squared > 0.95 && fit.slope > 0.0,
        format!(
            "ln P vs bias: slope {:.3} /µA, R² = {:.4}; P from {:.2e} to {:.2e}",
            fit.slope,
            fit.r_squared,
            points[0].afterpulse,
            points[points.len() - 1].afterpulse
        ),
    );
    Ok(out)
}

pub(super) fn fig7(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let points = sweep(ctx)?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut row = vec![p.bias];
            row.extend(p.trains.counts.iter().map(|&c| c as f64));
            row
        })
        .collect();
    out.file("trains", table_csv(&["bias_a", "n1", "n2", "n3", "n4", "n5", "n6_or_more"], &rows));

    let low = &points[0];
    let single = low.trains.count(1) as f64 / low.trains.trains() as f64;
    out.check(
        "low-bias-singles",
        single >= 0.99,
        format!("{:.1} µA: {:.3}% of trains have n = 1 (need ≥ 99%)", bias_ua(low), 100.0 * single),
    );

    let mid = &points[points.len() / 2];
    let p = mid.branching;
    let trains = mid.trains.trains() as f64;
    let mut ok = true;
    let mut detail = format!("{:.1} µA, p = {p:.4}:", bias_ua(mid));
    for n in 1..=4 {
        let expected = trains * p.powi(n as i32 - 1) * (1.0 - p);
        let observed = mid.trains.count(n);
        ok &= poisson_consistent(observed, expected);
        detail.push_str(&format!(" n={n} {observed} vs {expected:.1};"));
    }
    out.check("geometric-law", ok, detail);
    Ok(out)
}

pub(super) fn fig8(ctx: &Context) -> Result<FigureOutput, FigureError> {
    let mut out = FigureOutput::new(ctx.id);
    let points = sweep(ctx)?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .filter_map(|p| {
            let (r, s) = p.ratio()?;
            Some(vec![p.bias, r, s, p.branching])
        })
        .collect();
    out.file("ratio", table_csv(&["bias_a", "ratio_2_to_1", "err", "branching_probability"], &rows));

    let mut worst = 0.0f64;
    let mut compared = 0;
    for p in points.iter().filter(|p| p.trains.count(2) >= MIN_PAIRS) {
        let (r, s) = p.ratio().expect("pairs present");
        worst = worst.max((r - p.branching).abs() / s);
        compared += 1;
    }
    out.check(
        "ratio-matches-branching",
        compared > 0 && worst <= 3.0,
        format!("{compared} bias points with n2 ≥ {MIN_PAIRS}; largest deviation {worst:.2}σ (limit 3σ)"),
    );

    let (Some(ratio_fit), Some(ap_fit)) = (ratio_trend(&points), afterpulse_trend(&points)) else {
        out.check("slope-matches-afterpulse", false, "degenerate sweep".into());
        return Ok(out);
    };
    let joint = ratio_fit.slope_std_error.hypot(ap_fit.slope_std_error);
    out.check(
        "slope-matches-afterpulse",
        (ratio_fit.slope - ap_fit.slope).abs() <= 3.0 * joint,
        format!(
            "ln(n2/n1) slope {:.4} ± {:.4} /µA vs ln P slope {:.4} ± {:.4} /µA",
            ratio_fit.slope, ratio_fit.slope_std_error, ap_fit.slope, ap_fit.slope_std_error
        ),
    );
    Ok(out)
}
