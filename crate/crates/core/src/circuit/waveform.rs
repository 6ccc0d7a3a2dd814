use std::io::{self, Write};

use super::CircuitError;

/// Uniformly sampled trace. Sample `k` sits at `t0 + k * sample_period`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_period: f64,
    t0: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_period: f64, t0: f64) -> Result<Self, CircuitError> {
        if samples.is_empty() {
            return Err(CircuitError::Waveform("no samples".into()));
        }
        if !(sample_period > 0.0) || !sample_period.is_finite() {
            return Err(CircuitError::Waveform(format!(
                "sample period must be > 0, got {sample_period}"
            )));
        }
        Ok(Self {
            samples,
            sample_period,
            t0,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.sample_period
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|k| self.time_at(k))
    }

    /// Same timing, new values.
    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self {
            samples,
            sample_period: self.sample_period,
            t0: self.t0,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.with_samples(self.samples.iter().map(|v| v * factor).collect())
    }

    /// Index and value of the sample with the largest magnitude.
    pub fn peak(&self) -> (usize, f64) {
        self.samples
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |best, (k, v)| {
                if v.abs() > best.1.abs() {
                    (k, v)
                } else {
                    best
                }
            })
    }

    /// Two-column CSV `time_s,value`, values printed with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_s,value")?;
        for (k, v) in self.samples.iter().enumerate() {
            writeln!(out, "{},{}", self.time_at(k), v)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::with_capacity(self.samples.len() * 40);
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}
