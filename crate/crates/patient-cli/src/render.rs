//! Terminal rendering of feedback.

use therapy_core::compare::FeedbackMessage;

const LEVELS: &[u8] = b"_.-=+*#@";

/// One ASCII character per point, scaled to `lo..=hi`; gaps print as spaces.
pub fn sparkline(points: &[Option<f64>], lo: f64, hi: f64) -> String {
    let span = hi - lo;
    points
        .iter()
        .map(|p| match p {
            None => ' ',
            Some(v) => {
                let t = if span > 0.0 { ((v - lo) / span).clamp(0.0, 1.0) } else { 0.5 };
                LEVELS[(t * (LEVELS.len() - 1) as f64).round() as usize] as char
            }
        })
        .collect()
}

/// Every `step`-th point, so a 100-point overlay fits a narrow terminal.
fn thin(points: &[Option<f64>], step: usize) -> Vec<Option<f64>> {
    points.iter().step_by(step.max(1)).copied().collect()
}

/// Smallest pitch range drawn, as a frequency ratio (four semitones), so
/// a steady voice reads as flat rather than as magnified wobble.
const MIN_RATIO: f64 = 1.259_921;

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo > 0.0 && hi.is_finite()) || hi / lo >= MIN_RATIO {
        return (lo, hi);
    }
    let centre = (lo * hi).sqrt();
    (centre / MIN_RATIO.sqrt(), centre * MIN_RATIO.sqrt())
}

/// Patient and reference pitch on a shared scale.
pub fn pitch_overlay(feedback: &FeedbackMessage) -> [String; 2] {
    let g = &feedback.graph_payload.pitch_hz;
    let voiced = g.patient.iter().chain(&g.reference).flatten();
    let (lo, hi) = voiced.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (lo, hi) = widen(lo, hi);
    let (patient, reference) = (thin(&g.patient, 2), thin(&g.reference, 2));
    [
        format!("  you  |{}|", sparkline(&patient, lo, hi)),
        format!("  ref  |{}|", sparkline(&reference, lo, hi)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_extremes_and_gaps() {
        let s = sparkline(&[Some(100.0), None, Some(150.0), Some(200.0)], 100.0, 200.0);
        assert_eq!(s, "_ +@");
    }

    #[test]
    fn narrow_range_is_widened() {
        let (lo, hi) = widen(129.0, 131.0);
        assert!((hi / lo - MIN_RATIO).abs() < 1e-9);
        assert!((lo * hi - 129.0 * 131.0).abs() < 1e-6);
        assert_eq!(widen(100.0, 200.0), (100.0, 200.0));
    }

    #[test]
    fn flat_contour_sits_mid_scale() {
        assert_eq!(sparkline(&[Some(5.0); 3], 5.0, 5.0), "+++");
    }
}
