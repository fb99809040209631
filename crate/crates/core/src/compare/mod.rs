//! Patient-versus-reference comparison: contour alignment, discriminative
//! measures, closeness scoring and feedback.

pub mod dtw;
pub mod feedback;
pub mod score;
pub mod segments;

pub use dtw::{dtw, dtw_align, dtw_align_voicing, AlignmentPath, LocalDistance};
pub use feedback::{make_feedback, FeedbackMessage, GraphPayload, Verdict};
pub use score::{compare_utterances, ComparisonProfile, ComparisonReport, ContourOverlay, FeatureDeviation, FeatureKind};
pub use segments::{pitch_discontinuities, vowel_segment, VowelSegment};
