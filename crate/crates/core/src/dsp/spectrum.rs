//! Magnitude spectra, spectral shape statistics and spectrograms.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::framing::{FrameSequence, LOG_EPS};
use crate::error::DspError;

pub const BALANCE_SPLIT_HZ: f64 = 1000.0;
pub const ROLLOFF_FRACTION: f64 = 0.85;
pub const TILT_MIN_HZ: f64 = 100.0;
pub const SPECTROGRAM_RANGE_DB: f64 = 80.0;

/// One-sided spectrum of a zero-padded frame: bins `0..=n_fft/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub n_fft: usize,
    pub sample_rate: u32,
    pub magnitude: Vec<f64>,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        self.sample_rate as f64 / self.n_fft as f64
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width()
    }

    pub fn db(&self) -> Vec<f64> {
        self.magnitude.iter().map(|m| 20.0 * (m + LOG_EPS).log10()).collect()
    }

    /// `(1/N) * sum |X_k|^2` over the full two-sided spectrum, which equals
    /// the energy of the (tapered) frame that was transformed.
    pub fn energy(&self) -> f64 {
        let last = self.magnitude.len() - 1;
        let sum: f64 = self
            .magnitude
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let w = if k == 0 || (k == last && self.n_fft % 2 == 0) { 1.0 } else { 2.0 };
                w * m * m
            })
            .sum();
        sum / self.n_fft as f64
    }
}

/// Holds a planned FFT so repeated frames reuse the twiddles.
pub struct SpectrumAnalyzer {
    n_fft: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SpectrumAnalyzer {
    pub fn for_frame_length(frame_length: usize) -> Self {
        let n_fft = frame_length.max(1).next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        Self { n_fft, fft }
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn spectrum(&self, frame: &[f64], sample_rate: u32) -> Spectrum {
        let mut buf: Vec<Complex64> = frame
            .iter()
            .take(self.n_fft)
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        buf.resize(self.n_fft, Complex64::new(0.0, 0.0));
        self.fft.process(&mut buf);
        Spectrum {
            n_fft: self.n_fft,
            sample_rate,
            magnitude: buf[..=self.n_fft / 2].iter().map(|c| c.norm()).collect(),
        }
    }
}

/// Spectrum of one already-tapered frame, `n_fft` the next power of two.
pub fn spectrum(frame: &[f64], sample_rate: u32) -> Spectrum {
    SpectrumAnalyzer::for_frame_length(frame.len()).spectrum(frame, sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralStats {
    pub centroid: f64,
    pub spread: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    /// dB per Hz.
    pub slope: f64,
    /// dB per octave.
    pub tilt: f64,
    pub balance: f64,
    pub decrease: f64,
    pub rolloff: f64,
}

impl SpectralStats {
    pub fn mean_of(stats: &[SpectralStats]) -> Option<SpectralStats> {
        if stats.is_empty() {
            return None;
        }
        let n = stats.len() as f64;
        let avg = |f: fn(&SpectralStats) -> f64| stats.iter().map(f).sum::<f64>() / n;
        Some(SpectralStats {
            centroid: avg(|s| s.centroid),
            spread: avg(|s| s.spread),
            skewness: avg(|s| s.skewness),
            kurtosis: avg(|s| s.kurtosis),
            slope: avg(|s| s.slope),
            tilt: avg(|s| s.tilt),
            balance: avg(|s| s.balance),
            decrease: avg(|s| s.decrease),
            rolloff: avg(|s| s.rolloff),
        })
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Shape statistics over bins `1..=n_fft/2`; the DC bin is left out.
///
/// Moments treat the power spectrum `|X|^2` as a distribution over
/// frequency. Balance and roll-off use the same power values; slope and tilt
/// regress the dB magnitude on Hz and on log2(Hz) respectively.
pub fn spectral_stats(spec: &Spectrum) -> Result<SpectralStats, DspError> {
    let bins: Vec<usize> = (1..spec.magnitude.len()).collect();
    let freqs: Vec<f64> = bins.iter().map(|&b| spec.frequency(b)).collect();
    let mags: Vec<f64> = bins.iter().map(|&b| spec.magnitude[b]).collect();
    let power: Vec<f64> = mags.iter().map(|m| m * m).collect();
    let total: f64 = power.iter().sum();
    if total <= f64::MIN_POSITIVE || !total.is_finite() {
        return Err(DspError::DegenerateFrame("all-zero spectrum"));
    }

    let centroid = freqs.iter().zip(&power).map(|(f, p)| f * p).sum::<f64>() / total;
    let moment = |k: i32| {
        freqs
            .iter()
            .zip(&power)
            .map(|(f, p)| (f - centroid).powi(k) * p)
            .sum::<f64>()
            / total
    };
    let variance = moment(2);
    let spread = variance.sqrt();
    let (skewness, kurtosis) = if spread > 0.0 {
        (moment(3) / spread.powi(3), moment(4) / variance.powi(2))
    } else {
        (0.0, 0.0)
    };

    let db: Vec<f64> = mags.iter().map(|m| 20.0 * (m + LOG_EPS).log10()).collect();
    let slope = least_squares_slope(&freqs, &db);
    let (tilt_x, tilt_y): (Vec<f64>, Vec<f64>) = freqs
        .iter()
        .zip(&db)
        .filter(|(f, _)| **f >= TILT_MIN_HZ)
        .map(|(f, d)| (f.log2(), *d))
        .unzip();
    let tilt = least_squares_slope(&tilt_x, &tilt_y);

    let (mut hi, mut lo) = (0.0, 0.0);
    for (f, p) in freqs.iter().zip(&power) {
        if *f > BALANCE_SPLIT_HZ {
            hi += p;
        } else {
            lo += p;
        }
    }
    let balance = hi / (lo + LOG_EPS);

    let first = mags[0];
    let tail: f64 = mags[1..].iter().sum();
    let decrease = if tail > 0.0 {
        mags[1..]
            .iter()
            .enumerate()
            .map(|(i, m)| (m - first) / (i + 1) as f64)
            .sum::<f64>()
            / tail
    } else {
        0.0
    };

    // Each bin's power is spread evenly over its half-bin neighbourhood, so
    // the cumulative curve is piecewise linear and the crossing is exact.
    let target = ROLLOFF_FRACTION * total;
    let half = spec.bin_width() / 2.0;
    let mut acc = 0.0;
    let mut rolloff = *freqs.last().unwrap();
    for (f, p) in freqs.iter().zip(&power) {
        if acc + p >= target && *p > 0.0 {
            rolloff = (f - half + 2.0 * half * (target - acc) / p).max(*f - half);
            break;
        }
        acc += p;
    }
    let rolloff = rolloff.clamp(freqs[0], spec.sample_rate as f64 / 2.0);

    Ok(SpectralStats {
        centroid,
        spread,
        skewness,
        kurtosis,
        slope,
        tilt,
        balance,
        decrease,
        rolloff,
    })
}

/// Time–frequency dB matrix. `values[bin][frame]`; rows are bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    pub n_fft: usize,
    pub sample_rate: u32,
    pub hop_length: usize,
    pub frame_times: Vec<f64>,
    pub bin_frequencies: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Spectrogram {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn columns(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// CSV with one line per frequency bin: `frequency_hz,v0,v1,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz");
        for t in &self.frame_times {
            out.push_str(&format!(",{t:.4}"));
        }
        out.push('\n');
        for (f, row) in self.bin_frequencies.iter().zip(&self.values) {
            out.push_str(&format!("{f}"));
            for v in row {
                out.push_str(&format!(",{v:.3}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Spectrogram from already framed and tapered signal, clamped to the top
/// 80 dB.
pub fn spectrogram_from_frames(frames: &FrameSequence) -> Spectrogram {
    let analyzer = SpectrumAnalyzer::for_frame_length(frames.frame_length);
    let columns: Vec<Vec<f64>> = frames
        .frames
        .iter()
        .map(|f| analyzer.spectrum(f, frames.sample_rate).db())
        .collect();
    let max = columns
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let floor = max - SPECTROGRAM_RANGE_DB;
    let n_bins = analyzer.n_fft() / 2 + 1;
    let values = (0..n_bins)
        .map(|b| columns.iter().map(|c| c[b].max(floor)).collect())
        .collect();
    let n_fft = analyzer.n_fft();
    Spectrogram {
        n_fft,
        sample_rate: frames.sample_rate,
        hop_length: frames.hop_length,
        frame_times: frames.frame_times(),
        bin_frequencies: (0..n_bins)
            .map(|b| b as f64 * frames.sample_rate as f64 / n_fft as f64)
            .collect(),
        values,
    }
}
