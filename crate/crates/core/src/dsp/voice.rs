//! Glottal cycle marking and cycle-to-cycle perturbation (local jitter and
//! local shimmer).

use serde::{Deserialize, Serialize};

use super::pitch::PitchContour;
use crate::audio::AudioBuffer;
use crate::error::DspError;

/// Next mark is searched in `[0.7, 1.3]` local periods after the current one.
const SEARCH_LO: f64 = 0.7;
const SEARCH_HI: f64 = 1.3;
/// Voiced runs yielding fewer periods than this are discarded.
const MIN_RUN_PERIODS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRun {
    /// Fractional sample positions of the cycle peaks.
    pub marks: Vec<f64>,
    /// `periods[i]` spans `marks[i]..marks[i+1]`, in seconds.
    pub periods: Vec<f64>,
    /// Peak amplitude at each mark.
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleRuns {
    pub runs: Vec<CycleRun>,
}

impl CycleRuns {
    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn periods(&self) -> impl Iterator<Item = f64> + '_ {
        self.runs.iter().flat_map(|r| r.periods.iter().copied())
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.runs.iter().flat_map(|r| r.amplitudes.iter().copied())
    }

    /// Local jitter pooled over runs; differences never straddle two runs.
    pub fn jitter(&self) -> Result<f64, DspError> {
        pooled(self.runs.iter().map(|r| r.periods.as_slice()))
    }

    pub fn shimmer(&self) -> Result<f64, DspError> {
        pooled(self.runs.iter().map(|r| r.amplitudes.as_slice()))
    }
}

/// Parabolic peak refinement: `(offset from i, interpolated height)`.
fn refine_peak(samples: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= samples.len() {
        return (0.0, samples[i]);
    }
    let (ym, y0, yp) = (samples[i - 1], samples[i], samples[i + 1]);
    let denom = ym - 2.0 * y0 + yp;
    if denom.abs() < 1e-15 {
        return (0.0, y0);
    }
    let d = (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5);
    (d, y0 - 0.25 * (ym - yp) * d)
}

fn argmax(samples: &[f64], lo: usize, hi: usize) -> usize {
    (lo..hi)
        .max_by(|&a, &b| samples[a].total_cmp(&samples[b]).then(b.cmp(&a)))
        .unwrap_or(lo)
}

/// Marks waveform maxima one local period apart inside every voiced run of
/// `contour`, which must have been computed from `buf`.
pub fn pitch_periods(buf: &AudioBuffer, contour: &PitchContour) -> CycleRuns {
    let rate = buf.sample_rate as f64;
    let hop = contour.hop_length;
    let flen = contour.frame_length;
    let x = &buf.samples;
    let mut runs = Vec::new();

    for (first, last) in contour.voiced_runs() {
        let start = first * hop;
        let end = (last * hop + flen).min(x.len());
        let local_period = |pos: f64| -> f64 {
            let k = ((pos - flen as f64 / 2.0) / hop as f64).round();
            let k = (k.max(first as f64) as usize).min(last);
            rate / contour.frames[k].f0.unwrap_or(rate / flen as f64)
        };

        let t0 = local_period(start as f64);
        let first_hi = (start + t0.ceil() as usize).min(end);
        let mut idx = argmax(x, start, first_hi);
        let (mut frac, amp) = refine_peak(x, idx);
        let mut pos = idx as f64 + frac;
        let mut run = CycleRun {
            marks: vec![pos],
            periods: Vec::new(),
            amplitudes: vec![amp],
        };
        loop {
            let t = local_period(pos);
            let lo = idx + (SEARCH_LO * t).floor() as usize;
            let hi = idx + (SEARCH_HI * t).ceil() as usize + 1;
            if hi > end {
                break;
            }
            let next = argmax(x, lo, hi);
            let (f, a) = refine_peak(x, next);
            // integer and fractional parts apart, so equal cycles give
            // bit-identical periods
            run.periods.push(((next - idx) as f64 + (f - frac)) / rate);
            idx = next;
            frac = f;
            pos = idx as f64 + frac;
            run.marks.push(pos);
            run.amplitudes.push(a);
        }
        if run.periods.len() >= MIN_RUN_PERIODS {
            runs.push(run);
        }
    }
    CycleRuns { runs }
}

fn pooled<'a>(seqs: impl Iterator<Item = &'a [f64]>) -> Result<f64, DspError> {
    let (mut diff_sum, mut diffs, mut sum, mut count) = (0.0, 0usize, 0.0, 0usize);
    for s in seqs {
        diff_sum += s.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>();
        diffs += s.len().saturating_sub(1);
        sum += s.iter().sum::<f64>();
        count += s.len();
    }
    if diffs == 0 || count < 2 {
        return Err(DspError::InsufficientCycles(count));
    }
    Ok((diff_sum / diffs as f64) / (sum / count as f64))
}

/// Local jitter: mean absolute difference of consecutive periods over the
/// mean period.
pub fn jitter(periods: &[f64]) -> Result<f64, DspError> {
    pooled(std::iter::once(periods))
}

/// Local shimmer: mean absolute difference of consecutive cycle amplitudes
/// over the mean amplitude.
pub fn shimmer(amplitudes: &[f64]) -> Result<f64, DspError> {
    if amplitudes.iter().any(|&a| a <= 0.0) {
        return Err(DspError::Config("cycle amplitudes must be positive".into()));
    }
    pooled(std::iter::once(amplitudes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::framing::{frame_signal, WindowKind};
    use crate::dsp::pitch::{pitch_contour, PitchConfig};
    use crate::synth;

    fn runs_for(samples: Vec<f64>) -> CycleRuns {
        let buf = AudioBuffer::new(samples, 16_000);
        let frames = frame_signal(&buf, 25.0, 10.0, WindowKind::Hamming).unwrap();
        let c = pitch_contour(&frames, &PitchConfig::default()).unwrap();
        pitch_periods(&buf, &c)
    }

    #[test]
    fn jitter_closed_forms() {
        assert_eq!(jitter(&[0.005; 10]).unwrap(), 0.0);
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.00475 } else { 0.00525 }).collect();
        assert!((jitter(&alt).unwrap() - 0.10).abs() < 1e-12);
        assert_eq!(jitter(&[0.005]), Err(DspError::InsufficientCycles(1)));
    }

    #[test]
    fn shimmer_closed_forms() {
        assert_eq!(shimmer(&[0.7; 6]).unwrap(), 0.0);
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.9 } else { 1.1 }).collect();
        assert!((shimmer(&alt).unwrap() - 0.2).abs() < 1e-12);
        assert!((shimmer(&[1.0, 1.0, 2.0]).unwrap() - 0.375).abs() < 1e-12);
        assert_eq!(shimmer(&[1.0]), Err(DspError::InsufficientCycles(1)));
    }

    #[test]
    fn periodic_pulse_train_periods() {
        let periods = vec![80usize; 200];
        let runs = runs_for(synth::pulse_train(&periods, &[0.8]));
        assert!(!runs.is_empty());
        for p in runs.periods() {
            assert!((p - 0.005).abs() <= 1.0 / 16_000.0 + 1e-12, "{p}");
        }
    }

    #[test]
    fn alternating_pulse_train_periods() {
        let periods: Vec<usize> = (0..200).map(|i| if i % 2 == 0 { 76 } else { 84 }).collect();
        let runs = runs_for(synth::pulse_train(&periods, &[0.8]));
        assert!(!runs.is_empty());
        let one = 1.0 / 16_000.0 + 1e-12;
        for run in &runs.runs {
            for w in run.periods.windows(2) {
                let (a, b) = (w[0].min(w[1]), w[0].max(w[1]));
                assert!((a - 0.00475).abs() <= one && (b - 0.00525).abs() <= one, "{w:?}");
            }
        }
    }

    #[test]
    fn alternation_with_shimmer_is_not_period_doubled() {
        // the pair 76+84 is exactly periodic; unequal peaks make that period
        // the strongest, yet cycles must still be marked one pulse apart
        let periods: Vec<usize> = (0..160).map(|i| if i % 2 == 0 { 76 } else { 84 }).collect();
        let runs = runs_for(synth::pulse_train(&periods, &[0.8, 0.6]));
        assert!((runs.jitter().unwrap() - 0.1).abs() < 0.01);
        assert!((runs.shimmer().unwrap() - 0.2 / 0.7).abs() < 0.03);
    }

    #[test]
    fn noise_has_no_cycles() {
        let runs = runs_for(synth::white_noise(16_000, 0.3, 3));
        assert!(runs.is_empty(), "{} periods", runs.periods().count());
    }

    #[test]
    fn silence_has_no_cycles() {
        assert!(runs_for(vec![0.0; 8000]).is_empty());
    }
}
