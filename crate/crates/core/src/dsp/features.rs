use serde::{Deserialize, Serialize};

use super::framing::{energy_contour, frame_signal, EnergyContour, WindowKind};
use super::lpc::{default_order, formants, Formant};
use super::pitch::{pitch_contour, PitchConfig, PitchContour};
use super::spectrum::{spectral_stats, spectrogram_from_frames, SpectralStats, Spectrogram, SpectrumAnalyzer};
use super::voice::pitch_periods;
use crate::audio::{decode_wav, resample, AudioBuffer, CANONICAL_RATE};
use crate::error::DspError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub pitch: PitchConfig,
    /// `None` selects `2 + rate/1000`.
    pub lpc_order: Option<usize>,
    /// First-order pre-emphasis coefficient before LPC; 0 disables it.
    /// Recordings with a steep glottal roll-off benefit from about 0.97.
    pub pre_emphasis: f64,
    /// Utterances whose loudest frame is below this RMS count as silence.
    pub min_speech_rms: f64,
    pub min_duration_s: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            frame_ms: 25.0,
            hop_ms: 10.0,
            pitch: PitchConfig::default(),
            lpc_order: None,
            pre_emphasis: 0.0,
            min_speech_rms: 1e-4,
            min_duration_s: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// `None` for frames with an all-zero spectrum.
    pub frames: Vec<Option<SpectralStats>>,
    /// Mean over the frames of the active region.
    pub mean: Option<SpectralStats>,
}

/// First and last frame whose level is above the silence floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveRegion {
    pub first_frame: usize,
    pub last_frame: usize,
}

/// Complete acoustic profile of one utterance. Every per-frame vector has
/// `frame_count` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceFeatures {
    pub sample_rate: u32,
    pub frame_length: usize,
    pub hop_length: usize,
    pub frame_count: usize,
    pub frame_times: Vec<f64>,
    pub pitch: PitchContour,
    pub energy: EnergyContour,
    /// Empty for unvoiced frames and voiced frames with no qualifying root.
    pub formant_tracks: Vec<Vec<Formant>>,
    pub mean_f1: Option<f64>,
    pub jitter: Option<f64>,
    pub shimmer: Option<f64>,
    pub spectral: SpectralSummary,
    pub duration: f64,
    pub active_region: ActiveRegion,
    pub silence_floor_db: f64,
    pub spectrogram: Spectrogram,
}

impl UtteranceFeatures {
    pub fn jitter_percent(&self) -> Option<f64> {
        self.jitter.map(|j| j * 100.0)
    }

    /// Mean F1 over voiced frames in `first..=last` that carry formants.
    pub fn mean_f1_between(&self, first: usize, last: usize) -> Option<f64> {
        let vals: Vec<f64> = (first..=last.min(self.frame_count.saturating_sub(1)))
            .filter(|&k| self.pitch.frames[k].voiced)
            .filter_map(|k| self.formant_tracks[k].first().map(|f| f.frequency))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Runs the whole analysis chain on a buffer that is already at the
/// analysis rate.
pub fn extract_features(buf: &AudioBuffer, cfg: &AnalysisConfig) -> Result<UtteranceFeatures, DspError> {
    if buf.duration() < cfg.min_duration_s {
        return Err(DspError::TooShort(format!(
            "{:.3} s, need at least {} s",
            buf.duration(),
            cfg.min_duration_s
        )));
    }
    let frames = frame_signal(buf, cfg.frame_ms, cfg.hop_ms, WindowKind::Hamming)?;
    let energy = energy_contour(&frames);
    let max_rms = energy.rms.iter().copied().fold(0.0, f64::max);
    if max_rms < cfg.min_speech_rms {
        return Err(DspError::EmptySpeech);
    }
    let max_db = energy.db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max_db - cfg.pitch.silence_floor_db;
    let active: Vec<usize> = (0..frames.len()).filter(|&k| energy.db[k] >= floor).collect();
    let active_region = ActiveRegion {
        first_frame: active[0],
        last_frame: *active.last().unwrap(),
    };
    let hop_s = frames.hop_length as f64 / buf.sample_rate as f64;
    let duration = (active_region.last_frame - active_region.first_frame + 1) as f64 * hop_s;

    let pitch = pitch_contour(&frames, &cfg.pitch)?;
    let cycles = pitch_periods(buf, &pitch);
    let jitter = cycles.jitter().ok();
    let shimmer = cycles.shimmer().ok();

    let order = cfg.lpc_order.unwrap_or_else(|| default_order(buf.sample_rate));
    let formant_tracks: Vec<Vec<Formant>> = frames
        .raw
        .iter()
        .zip(&pitch.frames)
        .map(|(raw, p)| {
            if p.voiced {
                formants(raw, buf.sample_rate, order, cfg.pre_emphasis).unwrap_or_default()
            } else {
                Vec::new()
            }
        })
        .collect();

    let analyzer = SpectrumAnalyzer::for_frame_length(frames.frame_length);
    let spectral_frames: Vec<Option<SpectralStats>> = frames
        .frames
        .iter()
        .map(|f| spectral_stats(&analyzer.spectrum(f, buf.sample_rate)).ok())
        .collect();
    let active_stats: Vec<SpectralStats> = (active_region.first_frame..=active_region.last_frame)
        .filter_map(|k| spectral_frames[k])
        .collect();
    let spectral = SpectralSummary {
        mean: SpectralStats::mean_of(&active_stats),
        frames: spectral_frames,
    };

    let mut features = UtteranceFeatures {
        sample_rate: buf.sample_rate,
        frame_length: frames.frame_length,
        hop_length: frames.hop_length,
        frame_count: frames.len(),
        frame_times: frames.frame_times(),
        pitch,
        energy,
        formant_tracks,
        mean_f1: None,
        jitter,
        shimmer,
        spectral,
        duration,
        active_region,
        silence_floor_db: floor,
        spectrogram: spectrogram_from_frames(&frames),
    };
    features.mean_f1 = features.mean_f1_between(0, features.frame_count - 1);
    Ok(features)
}

/// Decode, convert to 16 kHz, analyse.
pub fn analyze_wav(bytes: &[u8], cfg: &AnalysisConfig) -> Result<UtteranceFeatures, DspError> {
    let buf = resample(&decode_wav(bytes)?, CANONICAL_RATE)?;
    extract_features(&buf, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn features(samples: Vec<f64>) -> UtteranceFeatures {
        extract_features(&AudioBuffer::new(samples, 16_000), &AnalysisConfig::default()).unwrap()
    }

    #[test]
    fn stationary_tone_profile() {
        let f = features(synth::tone(220.0, 0.5, 1.0, 16_000));
        assert!((f.duration - 1.0).abs() <= 0.05, "{}", f.duration);
        assert!(f.jitter.unwrap() < 1e-3, "{:?}", f.jitter);
        assert!(f.shimmer.unwrap() < 1e-3, "{:?}", f.shimmer);
        assert_eq!(f.pitch.len(), f.frame_count);
        assert_eq!(f.energy.rms.len(), f.frame_count);
        assert_eq!(f.formant_tracks.len(), f.frame_count);
        assert_eq!(f.spectral.frames.len(), f.frame_count);
        assert_eq!(f.spectrogram.columns(), f.frame_count);
    }

    #[test]
    fn padded_tone_duration() {
        let mut x = vec![0.0; 5600];
        x.extend(synth::tone(220.0, 0.5, 0.3, 16_000));
        x.extend(vec![0.0; 5600]);
        let f = features(x);
        assert!((f.duration - 0.3).abs() <= 0.05, "{}", f.duration);
    }

    #[test]
    fn silence_is_empty_speech() {
        let r = extract_features(&AudioBuffer::new(vec![0.0; 8000], 16_000), &AnalysisConfig::default());
        assert_eq!(r, Err(DspError::EmptySpeech));
    }

    #[test]
    fn too_short_is_rejected() {
        let r = extract_features(
            &AudioBuffer::new(synth::tone(220.0, 0.5, 0.1, 16_000), 16_000),
            &AnalysisConfig::default(),
        );
        assert!(matches!(r, Err(DspError::TooShort(_))));
    }

    #[test]
    fn synthetic_vowel_mean_f1() {
        let x = synth::vowel(&synth::VowelSpec::steady(120.0, &[(700.0, 80.0), (1220.0, 90.0)], 0.5), 16_000);
        let f = features(x);
        let f1 = f.mean_f1.unwrap();
        assert!((f1 - 700.0).abs() <= 70.0, "{f1}");
    }
}
