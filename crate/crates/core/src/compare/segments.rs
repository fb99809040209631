use serde::{Deserialize, Serialize};

use crate::dsp::{PitchContour, UtteranceFeatures};
use crate::error::CompareError;

/// Relative f0 change between adjacent voiced frames counted as a jump.
pub const JUMP_RATIO: f64 = 0.2;
/// Unvoiced holes of this many frames (inclusive) between voiced frames count
/// as a break.
pub const GAP_FRAMES: std::ops::RangeInclusive<usize> = 1..=3;

/// Abrupt pitch changes plus short voicing breaks.
pub fn pitch_discontinuities(contour: &PitchContour) -> usize {
    let frames = &contour.frames;
    let jumps = frames
        .windows(2)
        .filter(|w| match (w[0].f0, w[1].f0) {
            (Some(a), Some(b)) => (b - a).abs() / a > JUMP_RATIO,
            _ => false,
        })
        .count();
    let runs = contour.voiced_runs();
    let gaps = runs
        .windows(2)
        .filter(|w| GAP_FRAMES.contains(&(w[1].0 - w[0].1 - 1)))
        .count();
    jumps + gaps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VowelSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub first_frame: usize,
    pub last_frame: usize,
}

/// The longest voiced run, ties going to the louder run. Times are frame
/// centres.
pub fn vowel_segment(f: &UtteranceFeatures) -> Result<VowelSegment, CompareError> {
    let mean_rms = |(a, b): (usize, usize)| f.energy.rms[a..=b].iter().sum::<f64>() / (b - a + 1) as f64;
    let (first, last) = f
        .pitch
        .voiced_runs()
        .into_iter()
        .max_by(|&x, &y| {
            (x.1 - x.0)
                .cmp(&(y.1 - y.0))
                .then(mean_rms(x).total_cmp(&mean_rms(y)))
        })
        .ok_or(CompareError::NoVowel)?;
    Ok(VowelSegment {
        start_s: f.frame_times[first],
        end_s: f.frame_times[last],
        first_frame: first,
        last_frame: last,
    })
}
