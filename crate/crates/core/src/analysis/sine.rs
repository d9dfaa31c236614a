//! Coherent amplitude estimation at a known frequency.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineFit {
    pub amplitude_v: f64,
    pub frequency_hz: f64,
    /// Phase of `sin(2 pi f t + phase)` with `t` from the first sample.
    pub phase_rad: f64,
    pub offset_v: f64,
}

/// Least-squares fit of `i cos + q sin + offset` at `freq_hz`.
pub fn fit_sine(samples: &[f64], sample_period_s: f64, freq_hz: f64) -> Result<SineFit, AnalysisError> {
    let span_s = samples.len() as f64 * sample_period_s;
    let needed_s = 3.0 / freq_hz;
    if !(freq_hz > 0.0) || span_s < needed_s {
        return Err(AnalysisError::TooShortForFrequency { span_s, needed_s });
    }
    let w = 2.0 * PI * freq_hz * sample_period_s;
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (i, &y) in samples.iter().enumerate() {
        let (s, c) = (w * i as f64).sin_cos();
        let row = Vector3::new(c, s, 1.0);
        ata += row * row.transpose();
        aty += row * y;
    }
    let x = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| AnalysisError::InvalidArgument("singular sine fit".into()))?;
    Ok(SineFit {
        amplitude_v: x[0].hypot(x[1]),
        frequency_hz: freq_hz,
        phase_rad: x[0].atan2(x[1]),
        offset_v: x[2],
    })
}

/// Amplitude of the `freq_hz` component; see [`fit_sine`].
pub fn estimate_sine_amplitude(
    samples: &[f64],
    sample_period_s: f64,
    freq_hz: f64,
) -> Result<f64, AnalysisError> {
    fit_sine(samples, sample_period_s, freq_hz).map(|f| f.amplitude_v)
}
