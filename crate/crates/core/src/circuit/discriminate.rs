use super::Waveform;

/// Times of negative-going crossings of `threshold`, linearly interpolated
/// between samples. A crossing closer than `holdoff` to the last accepted
/// event is dropped, mimicking the counter's per-channel dead time.
pub fn discriminate(waveform: &Waveform, threshold: f64, holdoff: f64) -> Vec<f64> {
    let samples = waveform.samples();
    let dt = waveform.sample_period();
    let mut events = Vec::new();
    let mut last: Option<f64> = None;
    for (k, pair) in samples.windows(2).enumerate() {
        let (v0, v1) = (pair[0], pair[1]);
        if v0 > threshold && v1 <= threshold {
            let frac = (v0 - threshold) / (v0 - v1);
            let t = waveform.time_at(k) + frac * dt;
            if last.is_none_or(|prev| t - prev >= holdoff) {
                events.push(t);
                last = Some(t);
            }
        }
    }
    events
}
