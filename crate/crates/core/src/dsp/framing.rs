use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::DspError;

/// Floor added inside every logarithm.
pub const LOG_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Hamming,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Hamming if len == 1 => vec![1.0],
            WindowKind::Hamming => (0..len)
                .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
                .collect(),
        }
    }
}

/// Short-time analysis frames. `raw` holds the untapered samples, `frames`
/// the same samples multiplied by the window.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Vec<f64>>,
    pub raw: Vec<Vec<f64>>,
    pub frame_length: usize,
    pub hop_length: usize,
    pub window: WindowKind,
    pub sample_rate: u32,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Centre of frame `k` in seconds.
    pub fn frame_time(&self, k: usize) -> f64 {
        (k * self.hop_length) as f64 / self.sample_rate as f64
            + self.frame_length as f64 / (2.0 * self.sample_rate as f64)
    }

    pub fn frame_times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.frame_time(k)).collect()
    }
}

pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

/// Splits a buffer into overlapping frames. The tail shorter than a frame is
/// dropped.
pub fn frame_signal(
    buf: &AudioBuffer,
    frame_ms: f64,
    hop_ms: f64,
    window: WindowKind,
) -> Result<FrameSequence, DspError> {
    if !(hop_ms > 0.0 && frame_ms >= hop_ms) {
        return Err(DspError::Config(format!(
            "need frame_ms >= hop_ms > 0, got {frame_ms}/{hop_ms}"
        )));
    }
    let frame_length = ms_to_samples(frame_ms, buf.sample_rate);
    let hop_length = ms_to_samples(hop_ms, buf.sample_rate).max(1);
    if buf.len() < frame_length || frame_length == 0 {
        return Err(DspError::TooShort(format!(
            "{} samples, frame needs {frame_length}",
            buf.len()
        )));
    }
    let count = (buf.len() - frame_length) / hop_length + 1;
    let taper = window.coefficients(frame_length);
    let raw: Vec<Vec<f64>> = (0..count)
        .map(|k| buf.samples[k * hop_length..k * hop_length + frame_length].to_vec())
        .collect();
    let frames = raw
        .iter()
        .map(|f| f.iter().zip(&taper).map(|(x, w)| x * w).collect())
        .collect();
    Ok(FrameSequence {
        frames,
        raw,
        frame_length,
        hop_length,
        window,
        sample_rate: buf.sample_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyContour {
    pub rms: Vec<f64>,
    pub db: Vec<f64>,
}

pub fn rms_to_db(rms: f64) -> f64 {
    20.0 * (rms + LOG_EPS).log10()
}

/// Per-frame RMS of the untapered samples.
pub fn energy_contour(frames: &FrameSequence) -> EnergyContour {
    let rms: Vec<f64> = frames
        .raw
        .iter()
        .map(|f| (f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64).sqrt())
        .collect();
    let db = rms.iter().map(|&r| rms_to_db(r)).collect();
    EnergyContour { rms, db }
}
