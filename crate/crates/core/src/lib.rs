//! Speech analysis and therapy sequencing for remote articulation practice.
//!
//! * [`audio`] decodes WAV uploads and converts them to 16 kHz mono.
//! * [`dsp`] extracts pitch, energy, formants, jitter, shimmer, spectral
//!   shape and spectrograms.
//! * [`compare`] aligns a patient utterance with its reference and reduces
//!   the differences to a closeness score and feedback.
//! * [`program`] holds the prompt dictionary and the per-patient
//!   sequencing state machine.
//! * [`api`] carries the JSON wire types shared by the server and clients.

pub mod api;
pub mod audio;
pub mod compare;
pub mod dsp;
pub mod error;
pub mod program;
pub mod synth;

pub use error::{CompareError, DspError, ProgramError};
