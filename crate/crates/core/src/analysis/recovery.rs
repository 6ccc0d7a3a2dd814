use crate::procsim::TimeTagStream;
use crate::Picos;

use super::{conditional_histogram, Acceptance, AnalysisError};

/// Largest acceptance bin the estimator allows, picoseconds.
pub const MAX_ACCEPTANCE_BIN: Picos = 5_000;

/// Neighbouring bins averaged to estimate the afterpulse background under the
/// second-pulse bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Background {
    /// Two bins on each side.
    #[default]
    FourBin,
    /// One bin on each side.
    TwoBin,
}

/// Denominator of the efficiency ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Denominator {
    /// Windows whose first pulse was detected.
    #[default]
    FirstDetected,
    /// Windows where only the first pulse was detected.
    FirstOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecoveryOptions {
    pub acceptance_bin: Picos,
    pub background: Background,
    pub denominator: Denominator,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            acceptance_bin: 4_000,
            background: Background::FourBin,
            denominator: Denominator::FirstDetected,
        }
    }
}

/// One double-pulse measurement: the stream and its pulse separation.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublePulseRun {
    pub separation: Picos,
    /// Length of the window that follows each sync.
    pub window: Picos,
    pub stream: TimeTagStream,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryPoint {
    /// Seconds.
    pub separation: f64,
    pub efficiency: f64,
    /// Three standard deviations of counting error.
    pub stat_error: f64,
    pub first_detections: u64,
    pub second_bin_count: u64,
    pub background: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecoveryCurve {
    pub points: Vec<RecoveryPoint>,
}

/// Second-pulse efficiency per separation with afterpulse background
/// subtraction.
///
/// For each run: condition on a first-pulse click in the acceptance bin at
/// the sync, histogram with the acceptance bin width, take the bin holding the
/// second pulse, subtract the mean of its neighbours, divide by the
/// denominator. The error is `3σ` with `σ² = N_bin + Σ N_neighbour / k²`.
pub fn recovery_curve(
    runs: &[DoublePulseRun],
    options: RecoveryOptions,
) -> Result<RecoveryCurve, AnalysisError> {
    let bin = options.acceptance_bin;
    if bin == 0 || bin > MAX_ACCEPTANCE_BIN {
        return Err(AnalysisError::Config(format!(
            "acceptance bin must be in (0, {MAX_ACCEPTANCE_BIN}] ps, got {bin}"
        )));
    }
    let mut order: Vec<&DoublePulseRun> = runs.iter().collect();
    order.sort_by_key(|r| r.separation);
    if order.windows(2).any(|w| w[0].separation == w[1].separation) {
        return Err(AnalysisError::Config("duplicate separation".into()));
    }
    let offsets: &[i64] = match options.background {
        Background::FourBin => &[-2, -1, 1, 2],
        Background::TwoBin => &[-1, 1],
    };
    let mut points = Vec::with_capacity(order.len());
    for run in order {
        if run.separation < 2 * bin {
            return Err(AnalysisError::Config(format!(
                "separation {} ps collides with the first-pulse bin (need >= {} ps)",
                run.separation,
                2 * bin
            )));
        }
        let cond = conditional_histogram(&run.stream, run.window, bin, Acceptance::at_sync(bin))?;
        let counts = &cond.histogram.counts;
        let b = (run.separation / bin) as i64;
        let neighbour = |o: i64| -> Result<u64, AnalysisError> {
            usize::try_from(b + o)
                .ok()
                .and_then(|k| counts.get(k).copied())
                .ok_or_else(|| {
                    AnalysisError::Config(format!(
                        "separation {} ps leaves no background bins inside the window",
                        run.separation
                    ))
                })
        };
        let n_bin = neighbour(0)?;
        let side: Vec<u64> = offsets.iter().map(|&o| neighbour(o)).collect::<Result<_, _>>()?;
        let k = side.len() as f64;
        let side_sum = side.iter().sum::<u64>() as f64;
        let background = side_sum / k;
        let signal = n_bin as f64 - background;
        let n_first = cond.conditioned_windows as f64;
        let denominator = match options.denominator {
            Denominator::FirstDetected => n_first,
            Denominator::FirstOnly => n_first - signal,
        };
        let sigma = (n_bin as f64 + side_sum / (k * k)).sqrt();
        let (efficiency, stat_error) = if denominator > 0.0 {
            ((signal / denominator).clamp(0.0, 1.0), 3.0 * sigma / denominator)
        } else {
            (0.0, 0.0)
        };
        points.push(RecoveryPoint {
            separation: crate::ps_to_seconds(run.separation),
            efficiency,
            stat_error,
            first_detections: cond.conditioned_windows,
            second_bin_count: n_bin,
            background,
        });
    }
    Ok(RecoveryCurve { points })
}

/// Efficiency and error from raw bin counts (the estimator's arithmetic).
pub fn subtract_background(second_bin: u64, neighbours: &[u64], first_detections: u64) -> (f64, f64) {
    let k = neighbours.len() as f64;
    let side: f64 = neighbours.iter().sum::<u64>() as f64;
    let eta = (second_bin as f64 - side / k) / first_detections as f64;
    let sigma = (second_bin as f64 + side / (k * k)).sqrt();
    (eta, 3.0 * sigma / first_detections as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definition_arithmetic() {
        let (eta, _) = subtract_background(10_000, &[180, 220], 400_000);
        assert!((eta - 0.0245).abs() < 1e-15);
        let (eta4, err) = subtract_background(10_000, &[180, 220, 190, 210], 400_000);
        assert!((eta4 - 0.0245).abs() < 1e-15);
        let sigma = (10_000.0f64 + 800.0 / 16.0).sqrt();
        assert!((err - 3.0 * sigma / 400_000.0).abs() < 1e-15);
    }

    fn synthetic_run(separation: Picos) -> DoublePulseRun {
        // 100 windows; first pulse always detected, second every other window
        let window = 2_000_000;
        let mut det = Vec::new();
        let mut sync = Vec::new();
        for w in 0..100u64 {
            let s = w * window;
            sync.push(s);
            det.push(s);
            if w % 2 == 0 {
                det.push(s + separation);
            }
        }
        DoublePulseRun {
            separation,
            window,
            stream: TimeTagStream {
                detector_events: det,
                sync_events: sync,
                duration: 100 * window,
                ..Default::default()
            },
        }
    }

    #[test]
    fn clean_runs() {
        let runs = vec![synthetic_run(300_000), synthetic_run(100_000)];
        let c = recovery_curve(&runs, RecoveryOptions::default()).unwrap();
        assert_eq!(c.points.len(), 2);
        assert!(c.points[0].separation < c.points[1].separation);
        for p in &c.points {
            assert_eq!(p.first_detections, 100);
            assert!((p.efficiency - 0.5).abs() < 1e-12);
        }
        let only = RecoveryOptions {
            denominator: Denominator::FirstOnly,
            ..Default::default()
        };
        let c = recovery_curve(&runs, only).unwrap();
        assert!((c.points[0].efficiency - 1.0).abs() < 1e-12);
    }

    #[test]
    fn configuration_errors() {
        let runs = vec![synthetic_run(7_000)];
        assert!(matches!(
            recovery_curve(&runs, RecoveryOptions::default()),
            Err(AnalysisError::Config(_))
        ));
        let wide = RecoveryOptions {
            acceptance_bin: 6_000,
            ..Default::default()
        };
        assert!(recovery_curve(&[synthetic_run(100_000)], wide).is_err());
        let dup = vec![synthetic_run(100_000), synthetic_run(100_000)];
        assert!(recovery_curve(&dup, RecoveryOptions::default()).is_err());
    }
}
