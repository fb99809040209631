//! Acoustic feature extraction. Every function here is a pure function of
//! its inputs.

pub mod features;
pub mod framing;
pub mod lpc;
pub mod pitch;
pub mod spectrum;
pub mod voice;

pub use features::{analyze_wav, extract_features, ActiveRegion, AnalysisConfig, SpectralSummary, UtteranceFeatures};
pub use framing::{energy_contour, frame_signal, EnergyContour, FrameSequence, WindowKind};
pub use lpc::{formants, lpc, Formant, LpcModel};
pub use pitch::{pitch_contour, PitchConfig, PitchContour, PitchFrame};
pub use spectrum::{spectral_stats, spectrogram_from_frames, spectrum, SpectralStats, Spectrogram, Spectrum};
pub use voice::{jitter, pitch_periods, shimmer, CycleRun, CycleRuns};
