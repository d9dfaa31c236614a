//! Uniform DAC code mapping.

use super::profile::HardwareProfile;
use super::CompileError;

/// Values this far outside the range (in LSBs) are treated as rounding noise.
const RANGE_SLACK_LSB: f64 = 1e-6;

/// Maps a DAC-side voltage onto `[0, 2^bits - 1]`, rounding to nearest with
/// ties away from zero.
pub fn quantize(voltage: f64, profile: &HardwareProfile) -> Result<u32, CompileError> {
    let lsb = profile.lsb_v();
    let slack = RANGE_SLACK_LSB * lsb;
    if !voltage.is_finite()
        || voltage < profile.dac_vmin - slack
        || voltage > profile.dac_vmax + slack
    {
        return Err(CompileError::VoltageOutOfRange {
            voltage,
            vmin: profile.dac_vmin,
            vmax: profile.dac_vmax,
        });
    }
    let code = ((voltage - profile.dac_vmin) / lsb).round();
    Ok(code.clamp(0.0, profile.max_code() as f64) as u32)
}

pub fn dequantize(code: u32, profile: &HardwareProfile) -> f64 {
    profile.dac_vmin + code as f64 * profile.lsb_v()
}
