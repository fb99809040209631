//! Deterministic test-signal synthesis: tones, sweeps, noise, pulse trains
//! and source-filter vowels. Used for reference recordings in demos and for
//! constructing signals with known acoustic parameters.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn tone(freq: f64, amplitude: f64, duration: f64, rate: u32) -> Vec<f64> {
    let n = (duration * rate as f64).round() as usize;
    (0..n)
        .map(|i| amplitude * (2.0 * PI * freq * i as f64 / rate as f64).sin())
        .collect()
}

/// Linear frequency sweep from `f_start` to `f_end`.
pub fn chirp(f_start: f64, f_end: f64, amplitude: f64, duration: f64, rate: u32) -> Vec<f64> {
    let n = (duration * rate as f64).round() as usize;
    let k = (f_end - f_start) / duration;
    (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            amplitude * (2.0 * PI * (f_start * t + 0.5 * k * t * t)).sin()
        })
        .collect()
}

/// Gaussian noise with standard deviation `sigma`, clamped to `[-1, 1]`.
pub fn white_noise(len: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    (0..len).map(|_| normal.sample(&mut rng).clamp(-1.0, 1.0)).collect()
}

/// Width in samples of each raised-cosine pulse; odd so the peak falls on a
/// sample.
pub const PULSE_WIDTH: usize = 41;

/// Raised-cosine pulses spaced by `periods` samples. `amplitudes` is cycled.
/// The first pulse peaks at sample `PULSE_WIDTH / 2`.
pub fn pulse_train(periods: &[usize], amplitudes: &[f64]) -> Vec<f64> {
    let total: usize = periods.iter().sum::<usize>() + PULSE_WIDTH;
    let mut out = vec![0.0; total];
    let shape: Vec<f64> = (0..PULSE_WIDTH)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * (n as f64 + 1.0) / (PULSE_WIDTH as f64 + 1.0)).cos())
        .collect();
    let mut start = 0;
    for i in 0..=periods.len() {
        let amp = amplitudes[i % amplitudes.len()];
        for (n, s) in shape.iter().enumerate() {
            out[start + n] += amp * s;
        }
        if i < periods.len() {
            start += periods[i];
        }
    }
    out
}

/// Two-pole resonator with unity gain at DC.
#[derive(Debug, Clone, Copy)]
pub struct Resonator {
    b0: f64,
    a1: f64,
    a2: f64,
}

impl Resonator {
    pub fn new(freq: f64, bandwidth: f64, rate: u32) -> Self {
        let r = (-PI * bandwidth / rate as f64).exp();
        let theta = 2.0 * PI * freq / rate as f64;
        let a1 = 2.0 * r * theta.cos();
        let a2 = -r * r;
        Self {
            b0: 1.0 - a1 - a2,
            a1,
            a2,
        }
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let (mut y1, mut y2) = (0.0, 0.0);
        x.iter()
            .map(|&v| {
                let y = self.b0 * v + self.a1 * y1 + self.a2 * y2;
                y2 = y1;
                y1 = y;
                y
            })
            .collect()
    }
}

/// Source-filter vowel description.
#[derive(Debug, Clone)]
pub struct VowelSpec {
    /// Piecewise-linear f0 breakpoints `(time_s, hz)`; held flat outside.
    pub f0_points: Vec<(f64, f64)>,
    /// `(frequency, bandwidth)` of each cascaded resonator.
    pub formants: Vec<(f64, f64)>,
    pub duration: f64,
    /// Peak amplitude after normalization.
    pub amplitude: f64,
    /// Intervals `(start_s, end_s)` set to silence.
    pub gaps: Vec<(f64, f64)>,
    pub lead_silence: f64,
    pub tail_silence: f64,
}

impl VowelSpec {
    pub fn steady(f0: f64, formants: &[(f64, f64)], duration: f64) -> Self {
        Self {
            f0_points: vec![(0.0, f0)],
            formants: formants.to_vec(),
            duration,
            amplitude: 0.6,
            gaps: Vec::new(),
            lead_silence: 0.0,
            tail_silence: 0.0,
        }
    }

    pub fn f0_at(&self, t: f64) -> f64 {
        let pts = &self.f0_points;
        if t <= pts[0].0 {
            return pts[0].1;
        }
        for w in pts.windows(2) {
            let ((t0, f0), (t1, f1)) = (w[0], w[1]);
            if t <= t1 {
                if t1 - t0 <= 0.0 {
                    return f1;
                }
                return f0 + (f1 - f0) * (t - t0) / (t1 - t0);
            }
        }
        pts[pts.len() - 1].1
    }
}

pub fn vowel(spec: &VowelSpec, rate: u32) -> Vec<f64> {
    let n = (spec.duration * rate as f64).round() as usize;
    let mut excitation = vec![0.0; n];
    let mut phase = 1.0;
    for (i, e) in excitation.iter_mut().enumerate() {
        if phase >= 1.0 {
            *e = 1.0;
            phase -= 1.0;
        }
        phase += spec.f0_at(i as f64 / rate as f64) / rate as f64;
    }
    let mut y = excitation;
    for &(f, bw) in &spec.formants {
        y = Resonator::new(f, bw, rate).filter(&y);
    }
    for &(a, b) in &spec.gaps {
        let lo = ((a * rate as f64).round() as usize).min(n);
        let hi = ((b * rate as f64).round() as usize).min(n);
        y[lo..hi].iter_mut().for_each(|v| *v = 0.0);
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        y.iter_mut().for_each(|v| *v *= spec.amplitude / peak);
    }
    let lead = (spec.lead_silence * rate as f64).round() as usize;
    let tail = (spec.tail_silence * rate as f64).round() as usize;
    let mut out = vec![0.0; lead];
    out.extend(y);
    out.extend(std::iter::repeat_n(0.0, tail));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_train_peaks_where_expected() {
        let x = pulse_train(&[80, 80], &[1.0, 0.5]);
        let c = PULSE_WIDTH / 2;
        assert!((x[c] - 1.0).abs() < 1e-12);
        assert!((x[c + 80] - 0.5).abs() < 1e-12);
        assert!((x[c + 160] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_is_reproducible() {
        assert_eq!(white_noise(100, 0.2, 1), white_noise(100, 0.2, 1));
        assert_ne!(white_noise(100, 0.2, 1), white_noise(100, 0.2, 2));
    }

    #[test]
    fn f0_interpolation() {
        let mut s = VowelSpec::steady(100.0, &[], 1.0);
        s.f0_points = vec![(0.0, 100.0), (1.0, 200.0)];
        assert!((s.f0_at(0.5) - 150.0).abs() < 1e-12);
        assert_eq!(s.f0_at(2.0), 200.0);
    }
}
