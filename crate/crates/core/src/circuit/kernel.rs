//! Post-click bias perturbation.
//!
//! The kernel is an additive bias current, sampled against time since the
//! click and linearly interpolated. It is zero before the click and after its
//! last sample, and never longer than [`MAX_KERNEL_DURATION`].

use super::{CircuitError, Waveform};

pub const MAX_KERNEL_DURATION: f64 = 2e-6;

/// Sample period used for parametric kernels.
pub const PARAMETRIC_SAMPLE_PERIOD: f64 = 50e-12;

/// Parametric kernels are cut this many widths past their centre.
const GAUSSIAN_SPAN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    /// The band-pass overshoot scaled by `coupling` (amperes per volt of
    /// filtered load voltage) and delayed by `time_offset`.
    FromFilter { coupling: f64, time_offset: f64 },
    /// Gaussian bump; `width` is the standard deviation.
    Parametric {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl KernelMode {
    /// Chooses coupling and offset so the kernel built from `reference_pulse`
    /// peaks at `peak_amplitude` amperes, `peak_time` seconds after the click.
    pub fn calibrated_from_filter(
        reference_pulse: &Waveform,
        peak_amplitude: f64,
        peak_time: f64,
    ) -> Result<Self, CircuitError> {
        let residual = overshoot_residual(reference_pulse)
            .ok_or_else(|| CircuitError::Kernel("reference pulse has no overshoot".into()))?;
        let (k, v) = residual
            .values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (k, v)| if v > b.1 { (k, v) } else { b });
        if !(v > 0.0) {
            return Err(CircuitError::Kernel("overshoot has no positive lobe".into()));
        }
        let residual_peak_time = reference_pulse.time_at(residual.start + k);
        Ok(KernelMode::FromFilter {
            coupling: peak_amplitude / v,
            time_offset: peak_time - residual_peak_time,
        })
    }
}

struct Residual {
    start: usize,
    values: Vec<f64>,
}

/// Part of a filtered pulse after its first sign change past the main lobe,
/// oriented so the overshoot is positive.
fn overshoot_residual(pulse: &Waveform) -> Option<Residual> {
    let (peak_index, peak) = pulse.peak();
    if peak == 0.0 {
        return None;
    }
    let sign = peak.signum();
    let samples = pulse.samples();
    let start = samples[peak_index..]
        .iter()
        .position(|&v| v * sign < 0.0)
        .map(|offset| peak_index + offset)?;
    Some(Residual {
        start,
        values: samples[start..].iter().map(|&v| -sign * v).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationKernel {
    samples: Vec<f64>,
    sample_period: f64,
}

impl PerturbationKernel {
    pub fn zero() -> Self {
        Self {
            samples: Vec::new(),
            sample_period: PARAMETRIC_SAMPLE_PERIOD,
        }
    }

    pub fn from_samples(samples: Vec<f64>, sample_period: f64) -> Result<Self, CircuitError> {
        if !(sample_period > 0.0) {
            return Err(CircuitError::Kernel("sample period must be > 0".into()));
        }
        if samples.len() as f64 * sample_period > MAX_KERNEL_DURATION * (1.0 + 1e-9) {
            return Err(CircuitError::Kernel(format!(
                "kernel longer than {MAX_KERNEL_DURATION} s"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(CircuitError::Kernel("non-finite kernel sample".into()));
        }
        Ok(Self {
            samples,
            sample_period,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    /// Kernel value `t` seconds after the click.
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 || self.samples.is_empty() {
            return 0.0;
        }
        let x = t / self.sample_period;
        let k = x.floor() as usize;
        if k + 1 >= self.samples.len() {
            return if k + 1 == self.samples.len() { self.samples[k] } else { 0.0 };
        }
        let frac = x - k as f64;
        self.samples[k] + frac * (self.samples[k + 1] - self.samples[k])
    }

    /// Time and value of the largest sample.
    pub fn peak(&self) -> (f64, f64) {
        self.samples
            .iter()
            .copied()
            .enumerate()
            .fold((0.0, 0.0), |best, (k, v)| {
                if v > best.1 {
                    (k as f64 * self.sample_period, v)
                } else {
                    best
                }
            })
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Interval upper bounds of the kernel.
    pub fn envelope(&self) -> KernelEnvelope {
        KernelEnvelope::new(self)
    }

    pub fn to_waveform(&self) -> Option<Waveform> {
        Waveform::new(self.samples.clone(), self.sample_period, 0.0).ok()
    }
}

/// Range maximum over kernel samples: an upper bound of the interpolated
/// kernel over any interval, in O(1) per query.
///
/// Samples are grouped into blocks (each block also covers the first sample of
/// the next, so interpolation between blocks is bounded) and a sparse table of
/// block maxima answers queries.
#[derive(Debug, Clone)]
pub struct KernelEnvelope {
    /// `levels[j][b]` = max of blocks `b .. b + 2^j`.
    levels: Vec<Vec<f64>>,
    block: usize,
    len: usize,
    sample_period: f64,
}

impl KernelEnvelope {
    const BLOCK: usize = 32;

    fn new(kernel: &PerturbationKernel) -> Self {
        let n = kernel.samples.len();
        let block = Self::BLOCK;
        let blocks = n.div_ceil(block);
        let base: Vec<f64> = (0..blocks)
            .map(|b| {
                let end = ((b + 1) * block + 1).min(n);
                kernel.samples[b * block..end]
                    .iter()
                    .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
            })
            .collect();
        let mut levels = vec![base];
        let mut width = 1;
        while 2 * width <= blocks {
            let prev = levels.last().expect("base level");
            let next = (0..=blocks - 2 * width)
                .map(|b| prev[b].max(prev[b + width]))
                .collect();
            levels.push(next);
            width *= 2;
        }
        Self {
            levels,
            block,
            len: n,
            sample_period: kernel.sample_period,
        }
    }

    /// Bound of `kernel(t)` for `t` in `[lo, hi]`.
    pub fn max_over(&self, lo: f64, hi: f64) -> f64 {
        let n = self.len;
        if n == 0 || hi < 0.0 || lo >= n as f64 * self.sample_period || hi < lo {
            return 0.0;
        }
        let outside = lo < 0.0 || hi >= (n - 1) as f64 * self.sample_period;
        let i0 = if lo <= 0.0 { 0 } else { ((lo / self.sample_period).floor() as usize).min(n - 1) };
        let i1 = ((hi / self.sample_period).ceil().max(0.0) as usize).min(n - 1);
        let (b0, b1) = (i0 / self.block, i1 / self.block);
        let level = (usize::BITS - 1 - (b1 - b0 + 1).leading_zeros()) as usize;
        let row = &self.levels[level];
        let inside = row[b0].max(row[b1 + 1 - (1 << level)]);
        if outside {
            inside.max(0.0)
        } else {
            inside
        }
    }
}

/// Builds the sampled bias perturbation for `mode`.
///
/// `filtered_pulse` is the band-limited load voltage of a click at `t = 0`;
/// it is required for [`KernelMode::FromFilter`] and ignored otherwise.
pub fn bias_perturbation_kernel(
    filtered_pulse: Option<&Waveform>,
    mode: &KernelMode,
) -> Result<PerturbationKernel, CircuitError> {
    match *mode {
        KernelMode::Parametric {
            amplitude,
            center,
            width,
        } => {
            if !(amplitude >= 0.0) || !(width >= 0.0) || !(center >= 0.0) {
                return Err(CircuitError::Kernel(format!(
                    "amplitude, centre and width must be >= 0 (got {amplitude}, {center}, {width})"
                )));
            }
            if amplitude == 0.0 || width == 0.0 {
                return Ok(PerturbationKernel::zero());
            }
            let end = (center + GAUSSIAN_SPAN * width).min(MAX_KERNEL_DURATION);
            let dt = PARAMETRIC_SAMPLE_PERIOD;
            let n = (end / dt).floor() as usize;
            let samples = (0..n)
                .map(|k| {
                    let z = (k as f64 * dt - center) / width;
                    amplitude * (-0.5 * z * z).exp()
                })
                .collect();
            PerturbationKernel::from_samples(samples, dt)
        }
        KernelMode::FromFilter {
            coupling,
            time_offset,
        } => {
            let pulse = filtered_pulse.ok_or_else(|| {
                CircuitError::Kernel("from-filter kernel needs the filtered pulse".into())
            })?;
            if !(coupling >= 0.0) || !(time_offset >= 0.0) {
                return Err(CircuitError::Kernel(format!(
                    "coupling and time offset must be >= 0 (got {coupling}, {time_offset})"
                )));
            }
            let dt = pulse.sample_period();
            let n = ((MAX_KERNEL_DURATION / dt).floor() as usize).max(1);
            let mut samples = vec![0.0; n];
            if let Some(residual) = overshoot_residual(pulse) {
                let shift = pulse.t0() + time_offset;
                for (j, v) in residual.values.iter().enumerate() {
                    let t = shift + (residual.start + j) as f64 * dt;
                    let k = (t / dt).round();
                    if k < 0.0 {
                        continue;
                    }
                    let k = k as usize;
                    if k >= n {
                        break;
                    }
                    samples[k] = coupling * v;
                }
            }
            let used = samples.iter().rposition(|&v| v != 0.0).map_or(0, |k| k + 1);
            samples.truncate(used);
            PerturbationKernel::from_samples(samples, dt)
        }
    }
}
