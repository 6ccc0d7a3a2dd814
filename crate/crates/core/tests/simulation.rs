//! Statistical properties of simulated streams.

use proptest::prelude::*;
use rayon::prelude::*;

use snspd::analysis::{
    afterpulse_probability, classify_trains, conditional_histogram, corrected_dcr, fit_exponential,
    interarrival_histogram, recovery_curve, Acceptance, DoublePulseRun, RecoveryOptions,
};
use snspd::circuit::PerturbationKernel;
use snspd::figures::{dark_run, default_model};
use snspd::procsim::{derive_seed, simulate, DetectorModel, StimulusConfig, TimeTagStream};
use snspd::stats::ks_exponential;
use snspd::{seconds_to_ps, Picos};

const MASTER: u64 = 0x5EED_0001;
const SEEDS: u64 = 20;
const US: Picos = 1_000_000;

fn model() -> DetectorModel {
    default_model().unwrap()
}

fn null_model() -> DetectorModel {
    model().with_kernel(PerturbationKernel::zero())
}

fn seeds() -> impl ParallelIterator<Item = u64> {
    (0..SEEDS).into_par_iter().map(|i| derive_seed(MASTER, i))
}

#[test]
fn null_kernel_gaps_are_exponential_across_seeds() {
    let m = null_model();
    let rate = m.rates.dark_rate(m.circuit.bias_current);
    let passing = seeds()
        .map(|seed| {
            let s = dark_run(&m, 1e4, seed).unwrap();
            let gaps: Vec<f64> = s
                .detector_events
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|&g| g > US)
                .map(|g| (g - US) as f64 * 1e-12)
                .collect();
            ks_exponential(&gaps, rate).passes(0.01) as usize
        })
        .sum::<usize>();
    assert!(passing >= 18, "{passing}/20");
}

#[test]
fn fitted_rate_recovers_generator_rate() {
    let m = null_model();
    let rate = m.rates.dark_rate(m.circuit.bias_current);
    let fits: Vec<(f64, f64)> = seeds()
        .map(|seed| {
            let s = dark_run(&m, 1e4, seed).unwrap();
            let h = interarrival_histogram(&s.detector_events, 100 * US, 20_000 * US);
            let f = fit_exponential(&h, 1, 5).unwrap();
            (f.rate, f.rate_std_error)
        })
        .collect();
    let within = fits.iter().filter(|(r, se)| (r - rate).abs() <= 3.0 * se).count();
    assert!(within >= 19, "{within}/20 within 3σ: {fits:?}");
    let mean = fits.iter().map(|f| f.0).sum::<f64>() / SEEDS as f64;
    let se = (fits.iter().map(|f| f.1 * f.1).sum::<f64>()).sqrt() / SEEDS as f64;
    assert!((mean - rate).abs() <= 3.0 * se, "mean {mean} ± {se}");
}

#[test]
fn recovery_estimator_is_unbiased_at_null() {
    let m = null_model();
    let mu = 10.0;
    let nominal = m.nominal_detection_probability(mu);
    let window = 2e-6;
    let seps = [500e-9, 750e-9, 1000e-9];
    let duration = (1e4 / nominal).ceil() * window;
    let curves: Vec<Vec<(f64, f64)>> = seeds()
        .map(|seed| {
            let runs: Vec<DoublePulseRun> = seps
                .iter()
                .enumerate()
                .map(|(i, &separation)| {
                    let stim = StimulusConfig::DoublePulse { separation, window, mu };
                    DoublePulseRun {
                        separation: seconds_to_ps(separation),
                        window: seconds_to_ps(window),
                        stream: simulate(&m, &stim, duration, derive_seed(seed, i as u64)).unwrap(),
                    }
                })
                .collect();
            recovery_curve(&runs, RecoveryOptions::default())
                .unwrap()
                .points
                .iter()
                .map(|p| (p.efficiency, p.stat_error / 3.0))
                .collect()
        })
        .collect();
    for (k, sep) in seps.iter().enumerate() {
        let mean = curves.iter().map(|c| c[k].0).sum::<f64>() / SEEDS as f64;
        let sigma = curves.iter().map(|c| c[k].1.powi(2)).sum::<f64>().sqrt() / SEEDS as f64;
        assert!(
            (mean - nominal).abs() <= 3.0 * sigma,
            "{sep}: mean {mean} vs nominal {nominal} (σ {sigma})"
        );
    }
}

#[test]
fn afterpulses_branch_like_original_clicks() {
    let m = model().with_bias(25.2e-6);
    let s = dark_run(&m, 1e5, derive_seed(MASTER, 100)).unwrap();
    let e = &s.detector_events;
    let (lo, hi) = (80_000, US);
    // (followed, total) for clicks that start a train vs clicks inside one
    let mut original = (0u64, 0u64);
    let mut afterpulse = (0u64, 0u64);
    for j in 0..e.len() - 1 {
        let followed = {
            let from = e.partition_point(|&x| x < e[j] + lo);
            from < e.len() && e[from] <= e[j] + hi
        };
        let class = if j > 0 && e[j] - e[j - 1] < US {
            &mut afterpulse
        } else {
            &mut original
        };
        class.0 += followed as u64;
        class.1 += 1;
    }
    let p1 = original.0 as f64 / original.1 as f64;
    let p2 = afterpulse.0 as f64 / afterpulse.1 as f64;
    let pooled = (original.0 + afterpulse.0) as f64 / (original.1 + afterpulse.1) as f64;
    let sigma = (pooled * (1.0 - pooled) * (1.0 / original.1 as f64 + 1.0 / afterpulse.1 as f64)).sqrt();
    assert!(afterpulse.1 > 5_000);
    assert!((p1 - p2).abs() <= 3.0 * sigma, "original {p1} vs afterpulse {p2} (σ {sigma})");
}

#[test]
fn dark_count_rate_is_monotone_in_bias() {
    let base = model();
    let rates: Vec<(f64, f64)> = [23.0e-6, 23.8e-6, 24.4e-6, 24.8e-6, 25.2e-6]
        .into_par_iter()
        .enumerate()
        .map(|(i, b)| {
            let s = dark_run(&base.with_bias(b), 2e4, derive_seed(MASTER, 200 + i as u64)).unwrap();
            let n = s.detector_events.len() as f64;
            let t = s.duration as f64 * 1e-12;
            (n / t, n.sqrt() / t)
        })
        .collect();
    for w in rates.windows(2) {
        assert!(w[1].0 - w[0].0 >= -3.0 * w[0].1.hypot(w[1].1), "{rates:?}");
    }
}

fn shifted(s: &TimeTagStream, offset: Picos) -> TimeTagStream {
    TimeTagStream {
        detector_events: s.detector_events.iter().map(|t| t + offset).collect(),
        sync_events: s.sync_events.iter().map(|t| t + offset).collect(),
        duration: s.duration + offset,
        metadata: s.metadata,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn analyses_are_shift_invariant(seed in any::<u64>(), offset in 0u64..1_000_000_000_000) {
        let m = model().with_bias(25.0e-6);
        let stim = StimulusConfig::DoublePulse { separation: 180e-9, window: 2e-6, mu: 10.0 };
        let s = simulate(&m, &stim, 0.02, seed).unwrap();
        let t = shifted(&s, offset);
        let (a, b) = (&s.detector_events, &t.detector_events);
        prop_assert_eq!(interarrival_histogram(a, 4_000, 2 * US), interarrival_histogram(b, 4_000, 2 * US));
        prop_assert_eq!(afterpulse_probability(a, US), afterpulse_probability(b, US));
        prop_assert_eq!(corrected_dcr(a, 0.02, US), corrected_dcr(b, 0.02, US));
        prop_assert_eq!(classify_trains(a, US), classify_trains(b, US));
        let acc = Acceptance::at_sync(4_000);
        prop_assert_eq!(
            conditional_histogram(&s, 2 * US, 4_000, acc).unwrap(),
            conditional_histogram(&t, 2 * US, 4_000, acc).unwrap()
        );
        let run = |stream: TimeTagStream| DoublePulseRun { separation: 180_000, window: 2 * US, stream };
        prop_assert_eq!(
            recovery_curve(&[run(s.clone())], RecoveryOptions::default()).unwrap(),
            recovery_curve(&[run(t)], RecoveryOptions::default()).unwrap()
        );
    }
}
