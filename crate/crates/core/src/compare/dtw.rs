use serde::{Deserialize, Serialize};

use crate::error::CompareError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPath {
    /// `(patient_frame, reference_frame)` from `(0, 0)` to the last pair.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
    pub normalized_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalDistance {
    Absolute,
    Squared,
}

impl LocalDistance {
    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            LocalDistance::Absolute => (a - b).abs(),
            LocalDistance::Squared => (a - b) * (a - b),
        }
    }
}

/// Distance between two pitch values where `None` is an unvoiced frame:
/// `|a - b|` when both are voiced, `penalty` on a voicing mismatch and 0
/// when both are unvoiced.
pub fn voicing_distance(a: Option<f64>, b: Option<f64>, penalty: f64) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => (x - y).abs(),
        (None, None) => 0.0,
        _ => penalty,
    }
}

/// Classic dynamic time warping with steps (1,0), (0,1), (1,1). Ties in the
/// backtrace prefer the diagonal step.
pub fn dtw<T>(a: &[T], b: &[T], dist: impl Fn(&T, &T) -> f64) -> Result<AlignmentPath, CompareError> {
    if a.is_empty() || b.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    let (n, m) = (a.len(), b.len());
    let mut acc = vec![f64::INFINITY; n * m];
    let idx = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let d = dist(&a[i], &b[j]);
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let mut best = f64::INFINITY;
                if i > 0 && j > 0 {
                    best = best.min(acc[idx(i - 1, j - 1)]);
                }
                if i > 0 {
                    best = best.min(acc[idx(i - 1, j)]);
                }
                if j > 0 {
                    best = best.min(acc[idx(i, j - 1)]);
                }
                best
            };
            acc[idx(i, j)] = best + d;
        }
    }

    let mut pairs = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        let step = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[idx(i - 1, j - 1)];
            let up = acc[idx(i - 1, j)];
            let left = acc[idx(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        (i, j) = step;
        pairs.push(step);
    }
    pairs.reverse();
    let total_cost = acc[idx(n - 1, m - 1)];
    Ok(AlignmentPath {
        normalized_cost: total_cost / pairs.len() as f64,
        total_cost,
        pairs,
    })
}

pub fn dtw_align(a: &[f64], b: &[f64], local: LocalDistance) -> Result<AlignmentPath, CompareError> {
    dtw(a, b, |x, y| local.eval(*x, *y))
}

/// Alignment of two pitch contours with unvoiced frames as `None`.
pub fn dtw_align_voicing(a: &[Option<f64>], b: &[Option<f64>], penalty: f64) -> Result<AlignmentPath, CompareError> {
    dtw(a, b, |x, y| voicing_distance(*x, *y, penalty))
}
