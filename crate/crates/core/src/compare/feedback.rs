use serde::{Deserialize, Serialize};

use super::score::ComparisonReport;

pub const GRAPH_POINTS: usize = 100;
pub const MAX_WORST: usize = 3;
/// Deviations below this are not worth pointing out.
pub const NOTABLE_DEVIATION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Repeat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPair<T> {
    pub patient: Vec<T>,
    pub reference: Vec<T>,
}

/// Fixed-length overlays for display; unvoiced pitch points are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPayload {
    pub pitch_hz: ContourPair<Option<f64>>,
    pub energy_db: ContourPair<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub verdict: Verdict,
    pub closeness: f64,
    /// Names of the largest deviations, largest first.
    pub worst_features: Vec<String>,
    pub graph_payload: GraphPayload,
    pub reference_audio_ref: String,
}

fn nearest<T: Clone>(v: &[T], n: usize) -> Vec<T> {
    if v.is_empty() {
        return Vec::new();
    }
    (0..n)
        .map(|i| {
            let pos = if n == 1 { 0.0 } else { i as f64 * (v.len() - 1) as f64 / (n - 1) as f64 };
            v[pos.round() as usize].clone()
        })
        .collect()
}

fn linear(v: &[f64], n: usize) -> Vec<f64> {
    match v.len() {
        0 => Vec::new(),
        1 => vec![v[0]; n],
        len => (0..n)
            .map(|i| {
                let pos = i as f64 * (len - 1) as f64 / (n - 1) as f64;
                let lo = pos.floor() as usize;
                let hi = (lo + 1).min(len - 1);
                let t = pos - lo as f64;
                v[lo] * (1.0 - t) + v[hi] * t
            })
            .collect(),
    }
}

pub fn make_feedback(report: &ComparisonReport, reference_audio_id: &str) -> FeedbackMessage {
    let mut ranked: Vec<_> = report
        .deviations
        .iter()
        .filter(|d| d.available && d.deviation >= NOTABLE_DEVIATION)
        .collect();
    ranked.sort_by(|a, b| b.deviation.total_cmp(&a.deviation));
    let o = &report.overlay;
    FeedbackMessage {
        verdict: if report.pass { Verdict::Pass } else { Verdict::Repeat },
        closeness: report.closeness,
        worst_features: ranked
            .iter()
            .take(MAX_WORST)
            .map(|d| d.feature.name().to_string())
            .collect(),
        graph_payload: GraphPayload {
            pitch_hz: ContourPair {
                patient: nearest(&o.patient_pitch, GRAPH_POINTS),
                reference: nearest(&o.reference_pitch, GRAPH_POINTS),
            },
            energy_db: ContourPair {
                patient: linear(&o.patient_energy_db, GRAPH_POINTS),
                reference: linear(&o.reference_energy_db, GRAPH_POINTS),
            },
        },
        reference_audio_ref: reference_audio_id.to_string(),
    }
}
