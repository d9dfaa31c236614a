//! Exponential-decay fitting by weighted log-linear least squares.

use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Amplitude above the baseline at the first sample.
    pub v0: f64,
    pub tau_s: f64,
    /// RMS of the fit residual in volts.
    pub residual_rms_v: f64,
}

impl DecayFit {
    pub fn scaled(&self, k: f64) -> DecayFit {
        DecayFit {
            v0: self.v0 * k,
            tau_s: self.tau_s,
            residual_rms_v: self.residual_rms_v * k.abs(),
        }
    }
}

/// Fits `v0 * exp(-t / tau)` to a segment decaying toward 0 V.
pub fn fit_exponential_decay(samples: &[f64], sample_period_s: f64) -> Result<DecayFit, AnalysisError> {
    fit_exponential_decay_with_baseline(samples, sample_period_s, 0.0)
}

/// Fits `baseline + v0 * exp(-t / tau)`, with `t` measured from the first
/// sample. Every sample must lie strictly on one side of the baseline.
///
/// Regresses `ln|v - baseline|` on `t` with weights `(v - baseline)^2`,
/// which approximates an unweighted fit in the original units.
pub fn fit_exponential_decay_with_baseline(
    samples: &[f64],
    sample_period_s: f64,
    baseline_v: f64,
) -> Result<DecayFit, AnalysisError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(AnalysisError::TooFewSamples {
            got: samples.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    let sign = if samples[0] - baseline_v < 0.0 { -1.0 } else { 1.0 };
    let y: Vec<f64> = samples.iter().map(|v| sign * (v - baseline_v)).collect();
    if y.iter().any(|&v| !(v > 0.0)) {
        return Err(AnalysisError::NonPositiveSamples);
    }

    let (mut sw, mut st, mut sl, mut stt, mut stl) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let w = v * v;
        let t = i as f64 * sample_period_s;
        let l = v.ln();
        sw += w;
        st += w * t;
        sl += w * l;
        stt += w * t * t;
        stl += w * t * l;
    }
    let tm = st / sw;
    let lm = sl / sw;
    let var = stt / sw - tm * tm;
    let slope = (stl / sw - tm * lm) / var;
    if !(slope < 0.0) || !slope.is_finite() {
        return Err(AnalysisError::NoDecay);
    }
    let tau_s = -1.0 / slope;
    let v0 = (lm - slope * tm).exp();

    let ss: f64 = y
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let r = v - v0 * (-(i as f64) * sample_period_s / tau_s).exp();
            r * r
        })
        .sum();
    Ok(DecayFit {
        v0: sign * v0,
        tau_s,
        residual_rms_v: (ss / y.len() as f64).sqrt(),
    })
}
