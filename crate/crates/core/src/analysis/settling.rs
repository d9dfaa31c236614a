//! Step settling time.

use super::AnalysisError;

/// Time from step onset until the signal enters, for the last time, the
/// band of `tolerance_frac * |step|` around its final value.
///
/// The initial and final values are the first and last samples. Onset is the
/// first sample outside the same band around the initial value.
pub fn measure_settling_time(
    samples: &[f64],
    sample_period_s: f64,
    tolerance_frac: f64,
) -> Result<f64, AnalysisError> {
    if !(tolerance_frac > 0.0 && tolerance_frac < 1.0) {
        return Err(AnalysisError::InvalidArgument(
            "tolerance_frac must lie in (0, 1)".into(),
        ));
    }
    let (Some(&v0), Some(&v1)) = (samples.first(), samples.last()) else {
        return Err(AnalysisError::NoStepDetected);
    };
    let step = v1 - v0;
    let scale = v0.abs().max(v1.abs());
    if !(step.abs() > 1e-12 * scale) {
        return Err(AnalysisError::NoStepDetected);
    }
    let band = tolerance_frac * step.abs();
    let onset = samples
        .iter()
        .position(|v| (v - v0).abs() > band)
        .ok_or(AnalysisError::NoStepDetected)?;
    let settled = samples
        .iter()
        .rposition(|v| (v - v1).abs() > band)
        .map_or(0, |i| i + 1);
    Ok(settled.saturating_sub(onset) as f64 * sample_period_s)
}
