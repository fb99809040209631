//! All-pole modelling by the autocorrelation method and formant picking from
//! the roots of the prediction polynomial.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::framing::WindowKind;
use crate::error::DspError;

const FORMANT_MIN_HZ: f64 = 90.0;
const FORMANT_NYQUIST_MARGIN_HZ: f64 = 50.0;
const FORMANT_MAX_BANDWIDTH_HZ: f64 = 400.0;

/// Prediction polynomial `A(z) = 1 + a[1] z^-1 + ... + a[p] z^-p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcModel {
    /// `coefficients[0] == 1`.
    pub coefficients: Vec<f64>,
    pub reflection: Vec<f64>,
    /// Final prediction error power.
    pub error: f64,
}

impl LpcModel {
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Roots of `z^p A(z)`; the poles of the synthesis filter `1/A(z)`.
    pub fn roots(&self) -> Vec<Complex64> {
        polynomial_roots(&self.coefficients)
    }
}

pub fn default_order(sample_rate: u32) -> usize {
    2 + sample_rate as usize / 1000
}

fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum())
        .collect()
}

/// Levinson–Durbin recursion on the frame's autocorrelation.
pub fn lpc(frame: &[f64], order: usize) -> Result<LpcModel, DspError> {
    if order == 0 || order >= frame.len() {
        return Err(DspError::Config(format!(
            "LPC order {order} needs 0 < order < frame length {}",
            frame.len()
        )));
    }
    let mut r = autocorrelation(frame, order);
    if r[0] <= f64::MIN_POSITIVE {
        return Err(DspError::DegenerateFrame("all-zero frame"));
    }
    // Tiny white-noise floor keeps the Toeplitz system positive definite.
    r[0] *= 1.0 + 1e-9;

    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut reflection = Vec::with_capacity(order);
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| a[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        reflection.push(k);
    }
    Ok(LpcModel {
        coefficients: a,
        reflection,
        error: err.max(0.0),
    })
}

fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    // coeffs are highest power first
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Roots of the monic polynomial `z^p + c[1] z^(p-1) + ... + c[p]` by
/// Durand–Kerner iteration.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[0];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[1..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::from_polar(1.0, 0.4);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| seed.powu(k as u32) * (0.5 * radius.min(2.0)))
        .collect();

    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for i in 0..degree {
            let zi = roots[i];
            let denom = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Complex64::new(1.0, 0.0), |acc, (_, &zj)| acc * (zi - zj));
            if denom.norm() < 1e-300 {
                roots[i] += Complex64::new(1e-8, 1e-8);
                change = f64::INFINITY;
                continue;
            }
            let delta = eval(&monic, zi) / denom;
            roots[i] = zi - delta;
            change = change.max(delta.norm());
        }
        if change < 1e-14 {
            break;
        }
    }
    roots
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Formant {
    pub frequency: f64,
    pub bandwidth: f64,
}

/// Converts a z-plane pole to an (frequency, bandwidth) pair in Hz.
pub fn pole_to_formant(root: Complex64, sample_rate: f64) -> Formant {
    Formant {
        frequency: root.arg() * sample_rate / (2.0 * PI),
        bandwidth: -(sample_rate / PI) * root.norm().ln(),
    }
}

/// Up to three formants of an untapered frame: optional first-order
/// pre-emphasis `x[n] - a*x[n-1]`, Hamming taper, LPC of order `order`, then
/// root picking. Returns an empty list when no root passes the frequency and
/// bandwidth gates.
pub fn formants(frame: &[f64], sample_rate: u32, order: usize, pre_emphasis: f64) -> Result<Vec<Formant>, DspError> {
    let rate = sample_rate as f64;
    let taper = WindowKind::Hamming.coefficients(frame.len());
    let mut shaped = Vec::with_capacity(frame.len());
    shaped.push(frame[0] * taper[0]);
    for i in 1..frame.len() {
        shaped.push((frame[i] - pre_emphasis * frame[i - 1]) * taper[i]);
    }
    let model = lpc(&shaped, order)?;
    let mut found: Vec<Formant> = model
        .roots()
        .into_iter()
        .filter(|z| z.im > 0.0)
        .map(|z| pole_to_formant(z, rate))
        .filter(|f| {
            f.frequency > FORMANT_MIN_HZ
                && f.frequency < rate / 2.0 - FORMANT_NYQUIST_MARGIN_HZ
                && f.bandwidth > 0.0
                && f.bandwidth < FORMANT_MAX_BANDWIDTH_HZ
        })
        .collect();
    found.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    found.truncate(3);
    Ok(found)
}
