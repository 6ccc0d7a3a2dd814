//! `snspd`: simulate detector runs, analyse time-tag files, reproduce figures.

use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use snspd::analysis::{
    afterpulse_probability, classify_trains, conditional_histogram, corrected_dcr, fit_exponential,
    interarrival_histogram, recovery_curve, Acceptance, Background, Denominator, DoublePulseRun,
    RecoveryOptions,
};
use snspd::config::{resolve_seed, RunConfig, SEED_ENV};
use snspd::export::{histogram_csv, recovery_csv, table_csv, trains_csv};
use snspd::figures::{reproduce, FigureId};
use snspd::procsim::{simulate, TimeTagStream};
use snspd::timetag_io::{read_stream, write_csv, write_stream};
use snspd::{parse_time, ps_to_seconds, seconds_to_ps, Picos};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "snspd", version, about = "Nanowire single-photon detector simulator and time-tag analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a run and write its time-tag file.
    Simulate {
        /// TOML run configuration; unset keys come from the default profile.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured seed (and SNSPD_SEED).
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; `.csv` selects the text format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one analysis on time-tag files and write its CSV.
    Analyze {
        analysis: Analysis,
        /// Time-tag file (binary or CSV). `recovery` takes one per separation.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// Histogram bin width, e.g. `0.1ms`, `4ns`.
        #[arg(long, value_parser = time_arg)]
        bin: Option<f64>,
        /// Afterpulse/train window, or the per-sync window for conditional analyses.
        #[arg(long, value_parser = time_arg)]
        window: Option<f64>,
        /// Largest waiting time histogrammed (interarrival, fit).
        #[arg(long, value_parser = time_arg)]
        max: Option<f64>,
        /// Pulse separation of each `--input` (recovery).
        #[arg(long, value_parser = time_arg)]
        separation: Vec<f64>,
        /// Background estimate of the recovery estimator.
        #[arg(long, value_enum, default_value = "four-bin")]
        background: BackgroundArg,
        /// Divide by windows where only the first pulse was seen.
        #[arg(long)]
        first_only: bool,
        /// Output CSV (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a figure: CSVs plus a pass/fail report in the output directory.
    Reproduce {
        /// Figure id (fig3 … fig11, figA2) or `all`.
        figure: String,
        #[arg(long, default_value = "figures")]
        out: PathBuf,
        /// Master seed (default: SNSPD_SEED, then the profile's seed).
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Analysis {
    Interarrival,
    Fit,
    Afterpulse,
    CorrectedDcr,
    Trains,
    Conditional,
    Recovery,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackgroundArg {
    FourBin,
    TwoBin,
}

fn time_arg(text: &str) -> std::result::Result<f64, String> {
    match parse_time(text) {
        Some(t) if t > 0.0 => Ok(t),
        _ => Err(format!("expected a positive time such as `0.1ms` or `4ns`, got `{text}`")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, seed, out } => cmd_simulate(config.as_deref(), seed, out),
        Command::Analyze {
            analysis,
            input,
            bin,
            window,
            max,
            separation,
            background,
            first_only,
            out,
        } => {
            let params = AnalyzeParams {
                bin,
                window,
                max,
                separation,
                background: match background {
                    BackgroundArg::FourBin => Background::FourBin,
                    BackgroundArg::TwoBin => Background::TwoBin,
                },
                denominator: if first_only {
                    Denominator::FirstOnly
                } else {
                    Denominator::FirstDetected
                },
            };
            cmd_analyze(analysis, &input, &params, out.as_deref())
        }
        Command::Reproduce { figure, out, seed } => cmd_reproduce(&figure, &out, seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

fn cmd_simulate(config: Option<&Path>, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default_profile(),
    };
    let seed = resolve_seed(seed, env_seed().as_deref(), cfg.seed)?;
    let model = cfg.model()?;
    let stream = simulate(&model, &cfg.stimulus, cfg.duration, seed)?;
    let out = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("run.nptt"));
    if out.extension().is_some_and(|e| e == "csv") {
        write_csv(&stream, &out)?;
    } else {
        write_stream(&stream, &out)?;
    }
    println!("output: {}", out.display());
    println!("seed: {seed}");
    println!("duration_s: {}", ps_to_seconds(stream.duration));
    println!("detector_events: {}", stream.detector_events.len());
    println!("sync_events: {}", stream.sync_events.len());
    println!("rate_hz: {}", stream.rate());
    println!("digest: {}", stream.metadata.digest_hex());
    Ok(ExitCode::SUCCESS)
}

struct AnalyzeParams {
    bin: Option<f64>,
    window: Option<f64>,
    max: Option<f64>,
    separation: Vec<f64>,
    background: Background,
    denominator: Denominator,
}

fn ps(t: f64) -> Picos {
    seconds_to_ps(t).max(1)
}

fn cmd_analyze(
    analysis: Analysis,
    inputs: &[PathBuf],
    p: &AnalyzeParams,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let streams: Vec<TimeTagStream> = inputs
        .iter()
        .map(|path| read_stream(path).map_err(|e| format!("{}: {e}", path.display())))
        .collect::<std::result::Result<_, _>>()?;
    if !matches!(analysis, Analysis::Recovery) && streams.len() != 1 {
        return Err("this analysis takes exactly one --input".into());
    }
    let s = &streams[0];
    let events = &s.detector_events;
    let window = ps(p.window.unwrap_or(1e-6));
    let (csv, summary) = match analysis {
        Analysis::Interarrival | Analysis::Fit => {
            let bin = ps(p.bin.unwrap_or(0.1e-3));
            let max = ps(p.max.unwrap_or(20e-3)).max(bin);
            let h = interarrival_histogram(events, bin, max);
            if events.is_empty() {
                let header = if matches!(analysis, Analysis::Fit) {
                    "bin_start_s,count,fit\n"
                } else {
                    "bin_start_s,count\n"
                };
                (header.to_string(), "no events".to_string())
            } else if matches!(analysis, Analysis::Interarrival) {
                let binned = h.binned();
                (histogram_csv(&h), format!("{} gaps binned of {}", binned, events.len().saturating_sub(1)))
            } else {
                let fit = fit_exponential(&h, 1, 5)?;
                let rows: Vec<Vec<f64>> = (0..h.len())
                    .map(|k| vec![h.bin_start_seconds(k), h.counts[k] as f64, fit.predict(k)])
                    .collect();
                let first = h.counts[0] as f64;
                let pred = fit.predict(0);
                (
                    table_csv(&["bin_start_s", "count", "fit"], &rows),
                    format!(
                        "rate {:.3} ± {:.3} /s, R² {:.5}; first bin {} vs fit {:.1} ({:+.1}σ)",
                        fit.rate,
                        fit.rate_std_error,
                        fit.r_squared,
                        first,
                        pred,
                        (first - pred) / pred.sqrt()
                    ),
                )
            }
        }
        Analysis::Afterpulse => {
            let header = "window_s,events,afterpulse_probability\n".to_string();
            match afterpulse_probability(events, window) {
                Ok(prob) => (
                    table_csv(
                        &["window_s", "events", "afterpulse_probability"],
                        &[vec![ps_to_seconds(window), events.len() as f64, prob]],
                    ),
                    format!("afterpulse probability {prob:.6}"),
                ),
                Err(_) => (header, "no events".to_string()),
            }
        }
        Analysis::CorrectedDcr => {
            let header = ["total_rate_hz", "corrected_rate_hz", "relative_difference"];
            if events.is_empty() || s.duration == 0 {
                (table_csv(&header, &[]), "no events".to_string())
            } else {
                let d = corrected_dcr(events, ps_to_seconds(s.duration), window)?;
                (
                    table_csv(
                        &header,
                        &[vec![d.total_rate(), d.corrected_rate(), d.relative_difference()]],
                    ),
                    format!("total {:.3} cps, corrected {:.3} cps", d.total_rate(), d.corrected_rate()),
                )
            }
        }
        Analysis::Trains => {
            if events.is_empty() {
                ("n,count\n".to_string(), "no events".to_string())
            } else {
                let d = classify_trains(events, window);
                let single = d.count(1) as f64 / d.trains() as f64;
                (trains_csv(&d), format!("{} trains, {:.3}% with n = 1", d.trains(), 100.0 * single))
            }
        }
        Analysis::Conditional => {
            let window = ps(p.window.unwrap_or(2e-6));
            let bin = ps(p.bin.unwrap_or(20e-9));
            let c = conditional_histogram(s, window, bin, Acceptance::at_sync(bin))?;
            (
                histogram_csv(&c.histogram),
                format!("{} windows, {} conditioned on a t = 0 click", c.sync_windows, c.conditioned_windows),
            )
        }
        Analysis::Recovery => {
            if p.separation.len() != streams.len() {
                return Err(format!(
                    "recovery needs one --separation per --input ({} vs {})",
                    p.separation.len(),
                    streams.len()
                )
                .into());
            }
            let window = ps(p.window.unwrap_or(2e-6));
            let runs: Vec<DoublePulseRun> = streams
                .into_iter()
                .zip(&p.separation)
                .map(|(stream, &sep)| DoublePulseRun {
                    separation: ps(sep),
                    window,
                    stream,
                })
                .collect();
            let options = RecoveryOptions {
                acceptance_bin: ps(p.bin.unwrap_or(4e-9)),
                background: p.background,
                denominator: p.denominator,
            };
            let curve = recovery_curve(&runs, options)?;
            (recovery_csv(&curve), format!("{} separations", curve.points.len()))
        }
    };
    match out {
        Some(path) => {
            std::fs::write(path, &csv)?;
            println!("{summary}");
            println!("output: {}", path.display());
        }
        None => {
            print!("{csv}");
            eprintln!("{summary}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_reproduce(figure: &str, out: &Path, seed: Option<u64>) -> Result<ExitCode> {
    let ids: Vec<FigureId> = if figure.eq_ignore_ascii_case("all") {
        FigureId::ALL.to_vec()
    } else {
        vec![figure.parse()?]
    };
    let seed = resolve_seed(seed, env_seed().as_deref(), RunConfig::default_profile().seed)?;
    let mut report = format!("master seed {seed}\n");
    let mut ok = true;
    for id in ids {
        let output = reproduce(id, seed)?;
        output.write_to(out)?;
        ok &= output.passed();
        report.push_str(&output.report());
    }
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.txt"), &report)?;
    print!("{report}");
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
