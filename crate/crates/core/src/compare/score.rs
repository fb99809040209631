//! Per-feature deviations between a patient utterance and its reference and
//! their reduction to a closeness score.
//!
//! Each feature yields a raw, unitful difference which is mapped into [0, 1)
//! by `1 - 2^(-raw / scale)`; a raw difference equal to the feature's scale
//! counts as a deviation of 0.5, twice the scale as 0.75, and so on. Closeness is one minus the
//! weighted sum of deviations over the features available on both sides.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dtw::{dtw_align, dtw_align_voicing, AlignmentPath, LocalDistance};
use super::segments::{pitch_discontinuities, vowel_segment, VowelSegment};
use crate::dsp::UtteranceFeatures;

/// Pitch is compared in semitones relative to this frequency.
const SEMITONE_REFERENCE_HZ: f64 = 100.0;

/// Aligning a voiced frame with an unvoiced one costs as much as a
/// four-semitone pitch error.
const UNVOICED_PENALTY_SEMITONES: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Pitch,
    Energy,
    Duration,
    MeanF1,
    Jitter,
    Shimmer,
    Discontinuities,
    SpectralCentroid,
    SpectralRolloff,
    SpectralBalance,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 10] = [
        FeatureKind::Pitch,
        FeatureKind::Energy,
        FeatureKind::Duration,
        FeatureKind::MeanF1,
        FeatureKind::Jitter,
        FeatureKind::Shimmer,
        FeatureKind::Discontinuities,
        FeatureKind::SpectralCentroid,
        FeatureKind::SpectralRolloff,
        FeatureKind::SpectralBalance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Pitch => "pitch",
            FeatureKind::Energy => "energy",
            FeatureKind::Duration => "duration",
            FeatureKind::MeanF1 => "mean_f1",
            FeatureKind::Jitter => "jitter",
            FeatureKind::Shimmer => "shimmer",
            FeatureKind::Discontinuities => "discontinuities",
            FeatureKind::SpectralCentroid => "spectral_centroid",
            FeatureKind::SpectralRolloff => "spectral_rolloff",
            FeatureKind::SpectralBalance => "spectral_balance",
        }
    }

    /// Raw difference that maps to a deviation of 0.5.
    pub fn default_scale(self) -> f64 {
        match self {
            // semitones per aligned frame
            FeatureKind::Pitch => 1.0,
            // dB per aligned frame
            FeatureKind::Energy => 6.0,
            FeatureKind::Duration => std::f64::consts::LN_2,
            FeatureKind::MeanF1 => 0.3,
            FeatureKind::Jitter | FeatureKind::Shimmer => 0.05,
            FeatureKind::Discontinuities => 5.0,
            FeatureKind::SpectralCentroid | FeatureKind::SpectralRolloff => 0.3,
            FeatureKind::SpectralBalance => std::f64::consts::LN_2,
        }
    }

    pub fn default_weight(self) -> f64 {
        match self {
            FeatureKind::Pitch => 0.25,
            FeatureKind::Energy => 0.15,
            FeatureKind::Duration => 0.15,
            FeatureKind::MeanF1 => 0.15,
            FeatureKind::Jitter => 0.05,
            FeatureKind::Shimmer => 0.05,
            FeatureKind::Discontinuities => 0.10,
            FeatureKind::SpectralCentroid => 0.04,
            FeatureKind::SpectralRolloff => 0.03,
            FeatureKind::SpectralBalance => 0.03,
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Feature set, weights, scales and pass threshold used for one disorder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonProfile {
    pub name: String,
    pub weights: BTreeMap<FeatureKind, f64>,
    pub scales: BTreeMap<FeatureKind, f64>,
    pub pass_threshold: f64,
    /// DTW cost of comparing a voiced frame with an unvoiced one.
    pub unvoiced_penalty: f64,
    /// Energy contours are taken relative to their maximum and floored here.
    pub energy_floor_db: f64,
}

impl Default for ComparisonProfile {
    fn default() -> Self {
        Self {
            name: "default".into(),
            weights: FeatureKind::ALL.iter().map(|&k| (k, k.default_weight())).collect(),
            scales: FeatureKind::ALL.iter().map(|&k| (k, k.default_scale())).collect(),
            pass_threshold: 0.6,
            unvoiced_penalty: UNVOICED_PENALTY_SEMITONES,
            energy_floor_db: -60.0,
        }
    }
}

impl ComparisonProfile {
    /// Cleft-palate speech shows up mostly as unstable pitch and shifted
    /// first formants, so those carry more weight.
    pub fn for_disorder(disorder: &str) -> Self {
        let mut p = Self::default();
        if disorder == "cleft_palate" {
            p.name = "cleft_palate".into();
            p.weights = [
                (FeatureKind::Pitch, 0.25),
                (FeatureKind::Energy, 0.10),
                (FeatureKind::Duration, 0.10),
                (FeatureKind::MeanF1, 0.20),
                (FeatureKind::Jitter, 0.05),
                (FeatureKind::Shimmer, 0.05),
                (FeatureKind::Discontinuities, 0.15),
                (FeatureKind::SpectralCentroid, 0.04),
                (FeatureKind::SpectralRolloff, 0.03),
                (FeatureKind::SpectralBalance, 0.03),
            ]
            .into_iter()
            .collect();
        }
        p
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.pass_threshold = threshold;
        self
    }

    pub fn scale(&self, kind: FeatureKind) -> f64 {
        self.scales.get(&kind).copied().unwrap_or_else(|| kind.default_scale())
    }

    /// Weights restricted to `available`, rescaled to sum to 1. Empty when
    /// no available feature carries weight.
    pub fn effective_weights(&self, available: &[FeatureKind]) -> BTreeMap<FeatureKind, f64> {
        let selected: Vec<(FeatureKind, f64)> = available
            .iter()
            .filter_map(|k| self.weights.get(k).map(|&w| (*k, w.max(0.0))))
            .collect();
        let total: f64 = selected.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return BTreeMap::new();
        }
        selected.into_iter().map(|(k, w)| (k, w / total)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDeviation {
    pub feature: FeatureKind,
    pub patient_value: Option<f64>,
    pub reference_value: Option<f64>,
    /// Unnormalized difference in the feature's own units.
    pub raw: f64,
    /// `1 - 2^(-raw / scale)`, 0 when unavailable.
    pub deviation: f64,
    /// Weight after redistribution; 0 when unavailable.
    pub weight: f64,
    pub available: bool,
    /// Per patient-frame local distance along the alignment, for contours.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Vec<f64>>,
}

/// Contours over each utterance's active region, for overlays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourOverlay {
    pub patient_pitch: Vec<Option<f64>>,
    pub reference_pitch: Vec<Option<f64>>,
    pub patient_energy_db: Vec<f64>,
    pub reference_energy_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VowelSegments {
    pub patient: Option<VowelSegment>,
    pub reference: Option<VowelSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub profile: String,
    pub deviations: Vec<FeatureDeviation>,
    pub closeness: f64,
    pub threshold: f64,
    pub pass: bool,
    pub vowel_segments: VowelSegments,
    pub pitch_alignment_cost: f64,
    pub overlay: ContourOverlay,
}

impl ComparisonReport {
    pub fn deviation(&self, kind: FeatureKind) -> Option<&FeatureDeviation> {
        self.deviations.iter().find(|d| d.feature == kind)
    }
}

fn active<T: Clone>(v: &[T], f: &UtteranceFeatures) -> Vec<T> {
    v[f.active_region.first_frame..=f.active_region.last_frame].to_vec()
}

fn semitones(f: &UtteranceFeatures) -> Vec<Option<f64>> {
    active(&f.pitch.f0(), f)
        .into_iter()
        .map(|hz| hz.map(|h| 12.0 * (h / SEMITONE_REFERENCE_HZ).log2()))
        .collect()
}

fn relative_energy(f: &UtteranceFeatures, floor_db: f64) -> Vec<f64> {
    let max = f.energy.db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    active(&f.energy.db, f)
        .into_iter()
        .map(|d| (d - max).max(floor_db))
        .collect()
}

fn per_patient_frame(path: &AlignmentPath, n: usize, local: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for &(i, j) in &path.pairs {
        sum[i] += local(i, j);
        count[i] += 1;
    }
    sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect()
}

struct Measured {
    kind: FeatureKind,
    patient: Option<f64>,
    reference: Option<f64>,
    raw: Option<f64>,
    detail: Option<Vec<f64>>,
}

impl Measured {
    fn scalar(kind: FeatureKind, p: Option<f64>, r: Option<f64>, diff: impl Fn(f64, f64) -> Option<f64>) -> Self {
        let raw = match (p, r) {
            (Some(a), Some(b)) => diff(a, b),
            _ => None,
        };
        Measured {
            kind,
            patient: p,
            reference: r,
            raw,
            detail: None,
        }
    }
}

fn deviation_of(raw: f64, scale: f64) -> f64 {
    if raw > 0.0 {
        1.0 - (-raw / scale).exp2()
    } else {
        0.0
    }
}

fn relative(a: f64, b: f64) -> Option<f64> {
    (b.abs() > 0.0).then(|| (a - b).abs() / b.abs())
}

fn log_ratio(a: f64, b: f64) -> Option<f64> {
    (a > 0.0 && b > 0.0).then(|| (a / b).ln().abs())
}

/// Compares two utterances analysed with the same configuration.
pub fn compare_utterances(
    patient: &UtteranceFeatures,
    reference: &UtteranceFeatures,
    profile: &ComparisonProfile,
) -> ComparisonReport {
    let mut measured = Vec::with_capacity(FeatureKind::ALL.len());

    let (pp, rp) = (semitones(patient), semitones(reference));
    let pitch_path = dtw_align_voicing(&pp, &rp, profile.unvoiced_penalty).expect("active regions are nonempty");
    let penalty = profile.unvoiced_penalty;
    measured.push(Measured {
        kind: FeatureKind::Pitch,
        patient: None,
        reference: None,
        raw: Some(pitch_path.normalized_cost),
        detail: Some(per_patient_frame(&pitch_path, pp.len(), |i, j| {
            super::dtw::voicing_distance(pp[i], rp[j], penalty)
        })),
    });

    let (pe, re) = (
        relative_energy(patient, profile.energy_floor_db),
        relative_energy(reference, profile.energy_floor_db),
    );
    let energy_path = dtw_align(&pe, &re, LocalDistance::Absolute).expect("active regions are nonempty");
    measured.push(Measured {
        kind: FeatureKind::Energy,
        patient: None,
        reference: None,
        raw: Some(energy_path.normalized_cost),
        detail: Some(per_patient_frame(&energy_path, pe.len(), |i, j| (pe[i] - re[j]).abs())),
    });

    measured.push(Measured::scalar(
        FeatureKind::Duration,
        Some(patient.duration),
        Some(reference.duration),
        log_ratio,
    ));

    let seg_p = vowel_segment(patient).ok();
    let seg_r = vowel_segment(reference).ok();
    let f1 = |f: &UtteranceFeatures, s: Option<VowelSegment>| s.and_then(|s| f.mean_f1_between(s.first_frame, s.last_frame));
    measured.push(Measured::scalar(
        FeatureKind::MeanF1,
        f1(patient, seg_p),
        f1(reference, seg_r),
        relative,
    ));

    let abs = |a: f64, b: f64| Some((a - b).abs());
    measured.push(Measured::scalar(FeatureKind::Jitter, patient.jitter, reference.jitter, abs));
    measured.push(Measured::scalar(FeatureKind::Shimmer, patient.shimmer, reference.shimmer, abs));
    measured.push(Measured::scalar(
        FeatureKind::Discontinuities,
        Some(pitch_discontinuities(&patient.pitch) as f64),
        Some(pitch_discontinuities(&reference.pitch) as f64),
        abs,
    ));

    let (sp, sr) = (patient.spectral.mean, reference.spectral.mean);
    measured.push(Measured::scalar(
        FeatureKind::SpectralCentroid,
        sp.map(|s| s.centroid),
        sr.map(|s| s.centroid),
        relative,
    ));
    measured.push(Measured::scalar(
        FeatureKind::SpectralRolloff,
        sp.map(|s| s.rolloff),
        sr.map(|s| s.rolloff),
        relative,
    ));
    measured.push(Measured::scalar(
        FeatureKind::SpectralBalance,
        sp.map(|s| s.balance),
        sr.map(|s| s.balance),
        log_ratio,
    ));

    let available: Vec<FeatureKind> = measured.iter().filter(|m| m.raw.is_some()).map(|m| m.kind).collect();
    let weights = profile.effective_weights(&available);

    let deviations: Vec<FeatureDeviation> = measured
        .into_iter()
        .map(|m| {
            let weight = weights.get(&m.kind).copied().unwrap_or(0.0);
            let (raw, deviation) = match m.raw {
                Some(raw) => {
                    let s = profile.scale(m.kind);
                    (raw, deviation_of(raw, s))
                }
                None => (0.0, 0.0),
            };
            FeatureDeviation {
                feature: m.kind,
                patient_value: m.patient,
                reference_value: m.reference,
                raw,
                deviation,
                weight,
                available: m.raw.is_some(),
                detail: m.detail,
            }
        })
        .collect();

    let penalty: f64 = deviations.iter().map(|d| d.weight * d.deviation).sum();
    let closeness = (1.0 - penalty).clamp(0.0, 1.0);

    ComparisonReport {
        profile: profile.name.clone(),
        closeness,
        threshold: profile.pass_threshold,
        pass: closeness >= profile.pass_threshold,
        vowel_segments: VowelSegments {
            patient: seg_p,
            reference: seg_r,
        },
        pitch_alignment_cost: pitch_path.total_cost,
        overlay: ContourOverlay {
            patient_pitch: active(&patient.pitch.f0(), patient),
            reference_pitch: active(&reference.pitch.f0(), reference),
            patient_energy_db: pe,
            reference_energy_db: re,
        },
        deviations,
    }
}
