//! Frame-wise f0 from the normalized cross-correlation of each frame with
//! its own lagged copy.
//!
//! For lag `t` the score is `sum x[n] x[n+t] / sqrt(sum x[n]^2 * sum x[n+t]^2)`
//! over `n < N - t`. Unlike the biased autocorrelation it does not decay with
//! lag, so a periodic frame scores close to 1 at every multiple of its
//! period; the shortest lag scoring within [`OCTAVE_TOLERANCE`] of the best
//! peak and near an integer fraction of its lag wins, which keeps
//! octave-down errors out. A formant sitting on a harmonic also makes a
//! short lag score well, so such a lag must survive in the LPC residual of
//! the frame too.

use serde::{Deserialize, Serialize};

use super::framing::{energy_contour, FrameSequence};
use super::lpc::lpc;
use crate::error::DspError;

/// A candidate peak must reach this fraction of the best peak in the band.
const OCTAVE_TOLERANCE: f64 = 0.8;
/// How far from an integer the ratio of best lag to candidate lag may be.
const SUBMULTIPLE_SLACK: f64 = 0.2;
/// Frames at each end of a voiced run that are checked against their inner
/// neighbour.
const EDGE_FRAMES: usize = 2;
/// f0 ratio to the inner neighbour beyond which an edge frame is re-picked;
/// above the abrupt jumps that count as discontinuities.
const EDGE_RATIO: f64 = 1.5;
/// How close to the neighbour's period a re-picked peak must be.
const NEAR_RATIO: f64 = 1.2;
/// Order of the inverse filter that strips formants before a candidate
/// shorter than the best peak is accepted.
const RESIDUAL_ORDER: usize = 8;
/// Fraction of the best peak's residual correlation such a candidate must
/// keep. Ringing at a harmonic near a formant falls close to zero; a true
/// shorter period keeps about half even when alternate cycles differ.
const RESIDUAL_TOLERANCE: f64 = 0.25;
/// Relative lag window searched in the residual, whose peaks are sharp.
const RESIDUAL_WINDOW: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
    /// Frames quieter than `max_rms_db - silence_floor_db` are never voiced.
    pub silence_floor_db: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min: 100.0,
            f0_max: 600.0,
            voicing_threshold: 0.45,
            silence_floor_db: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchFrame {
    pub voiced: bool,
    pub f0: Option<f64>,
    /// Normalized correlation at the chosen lag (0 when no peak was found).
    pub strength: f64,
}

impl PitchFrame {
    const UNVOICED: PitchFrame = PitchFrame {
        voiced: false,
        f0: None,
        strength: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchContour {
    pub frames: Vec<PitchFrame>,
    pub frame_times: Vec<f64>,
    pub sample_rate: u32,
    pub frame_length: usize,
    pub hop_length: usize,
}

impl PitchContour {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn f0(&self) -> Vec<Option<f64>> {
        self.frames.iter().map(|f| f.f0).collect()
    }

    pub fn voiced_count(&self) -> usize {
        self.frames.iter().filter(|f| f.voiced).count()
    }

    /// Maximal runs of consecutive voiced frames as inclusive index ranges.
    pub fn voiced_runs(&self) -> Vec<(usize, usize)> {
        voiced_runs(&self.frames)
    }
}

fn voiced_runs(frames: &[PitchFrame]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (k, f) in frames.iter().enumerate() {
        match (f.voiced, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, frames.len() - 1));
    }
    runs
}

fn nccf(frame: &[f64], lag: usize) -> f64 {
    let n = frame.len() - lag;
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (frame[i], frame[i + lag]);
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    let denom = (xx * yy).sqrt();
    if denom <= f64::MIN_POSITIVE {
        0.0
    } else {
        xy / denom
    }
}

/// Whether `short` is near an integer fraction of `long`. Shorter peaks at
/// other ratios come from formant ringing, not from the period.
fn divides(long: f64, short: f64) -> bool {
    let r = long / short;
    (r - r.round()).abs() <= SUBMULTIPLE_SLACK
}

/// Local NCCF maxima in the lag band as `(fractional lag, correlation)`,
/// shortest lag first.
fn lag_peaks(signal: &[f64], lag_min: usize, lag_max: usize) -> Vec<(f64, f64)> {
    let lo = lag_min.saturating_sub(1).max(1);
    let hi = (lag_max + 1).min(signal.len() - 2);
    let scores: Vec<f64> = (lo..=hi).map(|t| nccf(signal, t)).collect();
    let at = |t: usize| scores[t - lo];

    (lag_min.max(lo + 1)..=lag_max.min(hi - 1))
        .filter(|&t| at(t) > 0.0 && at(t) >= at(t - 1) && at(t) >= at(t + 1))
        .map(|t| {
            let (ym, y0, yp) = (at(t - 1), at(t), at(t + 1));
            let denom = ym - 2.0 * y0 + yp;
            let shift = if denom.abs() > 1e-12 {
                (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            (t as f64 + shift, y0)
        })
        .collect()
}

fn centre(frame: &[f64]) -> Vec<f64> {
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    frame.iter().map(|x| x - mean).collect()
}

/// The period among the peaks: the shortest lag near an integer fraction of
/// the strongest peak's lag, scoring within the octave tolerance of it, and
/// passing `holds(lag, best_lag)`.
fn choose(peaks: &[(f64, f64)], holds: impl Fn(f64, f64) -> bool) -> Option<(f64, f64)> {
    let &(best_lag, best) = peaks.iter().max_by(|a, b| a.1.total_cmp(&b.1))?;
    peaks
        .iter()
        .find(|&&(lag, s)| {
            s >= OCTAVE_TOLERANCE * best && divides(best_lag, lag) && (lag >= best_lag || holds(lag, best_lag))
        })
        .copied()
}

/// Prediction residual of `x` under an LPC fit to the windowed frame, or
/// `None` when the fit fails.
fn residual(windowed: &[f64], x: &[f64]) -> Option<Vec<f64>> {
    let a = lpc(windowed, RESIDUAL_ORDER).ok()?.coefficients;
    Some(
        (RESIDUAL_ORDER..x.len())
            .map(|n| a.iter().enumerate().map(|(k, c)| c * x[n - k]).sum())
            .collect(),
    )
}

/// Best NCCF of `signal` within [`RESIDUAL_WINDOW`] of `lag`.
fn nccf_near(signal: &[f64], lag: f64) -> f64 {
    let lo = ((lag * (1.0 - RESIDUAL_WINDOW)).floor() as usize).max(1);
    let hi = ((lag * (1.0 + RESIDUAL_WINDOW)).ceil() as usize).min(signal.len().saturating_sub(2));
    (lo..=hi).map(|t| nccf(signal, t)).fold(f64::NEG_INFINITY, f64::max)
}

fn voiced_frame(rate: f64, (lag, strength): (f64, f64), cfg: &PitchConfig) -> PitchFrame {
    PitchFrame {
        voiced: true,
        f0: Some((rate / lag).clamp(cfg.f0_min, cfg.f0_max)),
        strength,
    }
}

/// Re-examines the outer frames of each voiced run, where a frame that is
/// only partly voiced can lock onto formant ringing or a burst. An edge
/// frame far off its inner neighbour takes its own peak nearest that
/// neighbour's period, or becomes unvoiced if no such peak is strong enough.
fn repair_edges(frames: &mut [PitchFrame], peaks: &[Vec<(f64, f64)>], rate: f64, cfg: &PitchConfig) {
    let fix = |frames: &mut [PitchFrame], k: usize, inner: usize| {
        let Some(f) = frames[k].f0 else { return };
        let Some(g) = frames[inner].f0 else {
            frames[k] = PitchFrame::UNVOICED;
            return;
        };
        if (f / g).max(g / f) <= EDGE_RATIO {
            return;
        }
        let target = rate / g;
        let near = peaks[k]
            .iter()
            .filter(|&&(lag, s)| s >= cfg.voicing_threshold && (lag / target).max(target / lag) <= NEAR_RATIO)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        frames[k] = match near {
            Some(&p) => voiced_frame(rate, p, cfg),
            None => PitchFrame::UNVOICED,
        };
    };
    for (first, last) in voiced_runs(frames) {
        if last - first + 1 <= 2 * EDGE_FRAMES {
            continue;
        }
        for k in (first..first + EDGE_FRAMES).rev() {
            fix(frames, k, k + 1);
        }
        for k in last + 1 - EDGE_FRAMES..=last {
            fix(frames, k, k - 1);
        }
    }
}

/// Estimates one pitch value per frame. Voicing requires both a strong
/// correlation peak and a frame level within `silence_floor_db` of the
/// loudest frame.
pub fn pitch_contour(frames: &FrameSequence, cfg: &PitchConfig) -> Result<PitchContour, DspError> {
    if !(cfg.f0_min > 0.0 && cfg.f0_min < cfg.f0_max) {
        return Err(DspError::Config(format!(
            "need 0 < f0_min < f0_max, got {}..{}",
            cfg.f0_min, cfg.f0_max
        )));
    }
    let rate = frames.sample_rate as f64;
    let longest_period = rate / cfg.f0_min;
    if (frames.frame_length as f64) < 2.0 * longest_period - 1e-9 {
        return Err(DspError::Config(format!(
            "frame of {} samples cannot hold two periods of {} Hz",
            frames.frame_length, cfg.f0_min
        )));
    }
    let lag_min = (rate / cfg.f0_max).floor().max(2.0) as usize;
    let lag_max = (longest_period.ceil() as usize).min(frames.frame_length - 3);

    let energy = energy_contour(frames);
    let max_db = energy.db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max_db - cfg.silence_floor_db;

    let mut peaks = Vec::with_capacity(frames.len());
    let contour = frames
        .raw
        .iter()
        .zip(&frames.frames)
        .zip(&energy.db)
        .map(|((frame, windowed), &db)| {
            if db < floor {
                peaks.push(Vec::new());
                return PitchFrame::UNVOICED;
            }
            let centred = centre(frame);
            let p = lag_peaks(&centred, lag_min, lag_max);
            let resid = residual(windowed, &centred);
            let holds = |lag: f64, best_lag: f64| match &resid {
                Some(e) => nccf_near(e, lag) >= RESIDUAL_TOLERANCE * nccf_near(e, best_lag),
                None => true,
            };
            let frame = match choose(&p, holds) {
                Some(c) if c.1 >= cfg.voicing_threshold => voiced_frame(rate, c, cfg),
                Some((_, strength)) => PitchFrame {
                    strength,
                    ..PitchFrame::UNVOICED
                },
                None => PitchFrame::UNVOICED,
            };
            peaks.push(p);
            frame
        })
        .collect::<Vec<_>>();
    let mut contour = contour;
    repair_edges(&mut contour, &peaks, rate, cfg);

    Ok(PitchContour {
        frames: contour,
        frame_times: frames.frame_times(),
        sample_rate: frames.sample_rate,
        frame_length: frames.frame_length,
        hop_length: frames.hop_length,
    })
}
