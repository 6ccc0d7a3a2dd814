//! CSV renderings of analysis results. Numbers use Rust's shortest
//! round-trip formatting, so parsing a file gives back the exact values.
//!
//! | result            | columns                          |
//! |-------------------|----------------------------------|
//! | histogram         | `bin_start_s,count`              |
//! | recovery curve    | `separation_s,efficiency,err`    |
//! | train lengths     | `n,count` (`n = 6` is "6 or more") |
//! | waveform          | `time_s,value`                   |
//! | sweep table       | caller-defined header            |

use std::fmt::Write;

use crate::analysis::{Histogram, RecoveryCurve, TrainDistribution};

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_start_s,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        writeln!(out, "{},{}", h.bin_start_seconds(k), c).expect("string write");
    }
    out
}

pub fn recovery_csv(curve: &RecoveryCurve) -> String {
    let mut out = String::from("separation_s,efficiency,err\n");
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.separation, p.efficiency, p.stat_error).expect("string write");
    }
    out
}

pub fn trains_csv(d: &TrainDistribution) -> String {
    let mut out = String::from("n,count\n");
    for (k, c) in d.counts.iter().enumerate() {
        writeln!(out, "{},{}", k + 1, c).expect("string write");
    }
    out
}

/// Table with a header row and one row of numbers per record.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
