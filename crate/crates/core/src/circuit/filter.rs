//! Butterworth band-pass as cascaded second-order sections.
//!
//! Design path: analog low-pass prototype poles, low-pass to band-pass
//! transform around the prewarped band edges, bilinear map to the z plane,
//! then conjugate pole pairs grouped into biquads with zeros at `z = ±1`.
//! Each section is normalized to unit gain at the digital band centre.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{CircuitError, Waveform};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    /// Band-pass order; even, realized as `order / 2` sections.
    pub order: usize,
    pub passband_low: f64,
    pub passband_high: f64,
}

impl FilterSpec {
    pub const fn new(order: usize, passband_low: f64, passband_high: f64) -> Self {
        Self {
            order,
            passband_low,
            passband_high,
        }
    }

    pub fn validate(&self, sample_period: f64) -> Result<(), CircuitError> {
        if self.order < 2 || !self.order.is_multiple_of(2) {
            return Err(CircuitError::Filter(format!(
                "order must be even and >= 2, got {}",
                self.order
            )));
        }
        if !(sample_period > 0.0) {
            return Err(CircuitError::Filter(format!(
                "sample period must be > 0, got {sample_period}"
            )));
        }
        let nyquist = 0.5 / sample_period;
        if !(self.passband_low > 0.0
            && self.passband_low < self.passband_high
            && self.passband_high < nyquist)
        {
            return Err(CircuitError::Filter(format!(
                "need 0 < low ({}) < high ({}) < Nyquist ({nyquist}) Hz",
                self.passband_low, self.passband_high
            )));
        }
        Ok(())
    }

    fn prototype_order(&self) -> usize {
        self.order / 2
    }
}

/// `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    pub fn response(&self, z: Complex64) -> Complex64 {
        let zi = z.inv();
        let zi2 = zi * zi;
        (self.b[0] + self.b[1] * zi + self.b[2] * zi2) / (1.0 + self.a[0] * zi + self.a[1] * zi2)
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let a1 = Complex64::new(self.a[0], 0.0);
        let disc = (a1 * a1 - 4.0 * self.a[1]).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    fn run(&self, data: &mut [f64]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let (mut s1, mut s2) = (0.0, 0.0);
        for x in data.iter_mut() {
            let input = *x;
            let y = b0 * input + s1;
            s1 = b1 * input - a1 * y + s2;
            s2 = b2 * input - a2 * y;
            *x = y;
        }
    }
}

/// Designed filter: sections plus the sample period they were designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct SosCascade {
    sections: Vec<Biquad>,
    sample_period: f64,
    spec: FilterSpec,
}

impl SosCascade {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn spec(&self) -> &FilterSpec {
        &self.spec
    }

    pub fn response(&self, frequency: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, 2.0 * PI * frequency * self.sample_period);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z))
    }

    pub fn magnitude_db(&self, frequency: f64) -> f64 {
        20.0 * self.response(frequency).norm().log10()
    }

    pub fn poles(&self) -> Vec<Complex64> {
        self.sections.iter().flat_map(|s| s.poles()).collect()
    }
}

fn prewarp(frequency: f64, sample_period: f64) -> f64 {
    2.0 / sample_period * (PI * frequency * sample_period).tan()
}

/// Analytic Butterworth band-pass magnitude (linear).
///
/// With `sample_period = Some(T)` the edges and the evaluation frequency are
/// prewarped, which is the exact response of the bilinear design. With `None`
/// it is the continuous-time response.
pub fn butterworth_bandpass_magnitude(
    spec: &FilterSpec,
    frequency: f64,
    sample_period: Option<f64>,
) -> f64 {
    let warp = |f: f64| match sample_period {
        Some(t) => prewarp(f, t),
        None => 2.0 * PI * f,
    };
    let (wl, wh, w) = (warp(spec.passband_low), warp(spec.passband_high), warp(frequency));
    if w == 0.0 {
        return 0.0;
    }
    let x = (w * w - wl * wh) / (w * (wh - wl));
    1.0 / (1.0 + x.powi(2 * spec.prototype_order() as i32)).sqrt()
}

pub fn design_bandpass(spec: &FilterSpec, sample_period: f64) -> Result<SosCascade, CircuitError> {
    spec.validate(sample_period)?;
    let t = sample_period;
    let n = spec.prototype_order();
    let wl = prewarp(spec.passband_low, t);
    let wh = prewarp(spec.passband_high, t);
    let bw = wh - wl;
    let w0_sq = wl * wh;

    let mut upper = Vec::with_capacity(n);
    let mut real = Vec::new();
    for k in 0..n {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta);
        // s^2 - p*B*s + w0^2 = 0
        let half = p * bw / 2.0;
        let disc = (half * half - w0_sq).sqrt();
        for s in [half + disc, half - disc] {
            let z = (1.0 + s * t / 2.0) / (1.0 - s * t / 2.0);
            if z.im.abs() <= 1e-12 * z.norm() {
                real.push(z.re);
            } else if z.im > 0.0 {
                upper.push(z);
            }
        }
    }
    // Negative-imaginary poles are the conjugates of `upper`; an odd prototype
    // real pole can map to a real pair.
    real.sort_by(|a, b| a.partial_cmp(b).expect("finite poles"));
    let mut denominators: Vec<[f64; 2]> = upper
        .iter()
        .map(|z| [-2.0 * z.re, z.norm_sqr()])
        .collect();
    for pair in real.chunks(2) {
        match pair {
            [r1, r2] => denominators.push([-(r1 + r2), r1 * r2]),
            _ => {
                return Err(CircuitError::Filter(
                    "unpaired real pole in band-pass design".into(),
                ))
            }
        }
    }
    if denominators.len() != n {
        return Err(CircuitError::Filter(format!(
            "expected {n} sections, built {}",
            denominators.len()
        )));
    }

    let centre = 2.0 * (w0_sq.sqrt() * t / 2.0).atan();
    let z_centre = Complex64::from_polar(1.0, centre);
    let sections = denominators
        .into_iter()
        .map(|a| {
            let raw = Biquad {
                b: [1.0, 0.0, -1.0],
                a,
            };
            let g = 1.0 / raw.response(z_centre).norm();
            Biquad {
                b: [g, 0.0, -g],
                a,
            }
        })
        .collect();
    Ok(SosCascade {
        sections,
        sample_period,
        spec: *spec,
    })
}

/// Causal filtering through every section, same length as the input.
pub fn apply_filter(sections: &SosCascade, input: &Waveform) -> Result<Waveform, CircuitError> {
    let designed = sections.sample_period;
    if ((input.sample_period() - designed) / designed).abs() > 1e-9 {
        return Err(CircuitError::Filter(format!(
            "waveform sample period {:e} s does not match filter design {:e} s",
            input.sample_period(),
            designed
        )));
    }
    let mut data = input.samples().to_vec();
    for section in &sections.sections {
        section.run(&mut data);
    }
    Ok(input.with_samples(data))
}
