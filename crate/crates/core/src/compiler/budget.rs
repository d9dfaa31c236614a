//! Slot timing arithmetic and profile validation.

use std::fmt;

use serde::Serialize;

use super::profile::HardwareProfile;
use super::CompileError;

/// Per-slot timing derived from a [`HardwareProfile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingBudget {
    /// Time available per channel, 1/A.
    pub dt_s: f64,
    /// Switch RC constant C * R_sw.
    pub tau_c_s: f64,
    /// Effective charging time: rise + k * tau_c + fall.
    pub dt_c_s: f64,
    /// Highest DAC rate at which settling plus charging still fit a slot.
    pub max_rate_hz: f64,
    /// Slack left in the slot; negative means the profile is infeasible.
    pub margin_s: f64,
    /// Interval between visits to the same channel, N/A.
    pub recharge_period_s: f64,
    /// Hold discharge constant C * R_amp.
    pub tau_d_s: f64,
    /// Fractional hold loss over one recharge period, 1 - exp(-dT/tau_d).
    pub predicted_droop_frac: f64,
}

impl TimingBudget {
    /// Settling plus charging: the part of each slot that is spoken for.
    pub fn required_s(&self) -> f64 {
        self.dt_s - self.margin_s
    }

    pub fn is_feasible(&self) -> bool {
        self.margin_s >= 0.0
    }
}

pub fn timing_budget(profile: &HardwareProfile) -> TimingBudget {
    let dt_s = 1.0 / profile.dac_rate_hz;
    let tau_c_s = profile.tau_charge_s();
    let dt_c_s = profile.switch_rise_s
        + profile.charge_settle_multiplier * tau_c_s
        + profile.switch_fall_s;
    let required = profile.dac_settling_s + dt_c_s;
    let recharge_period_s = profile.num_channels as f64 * dt_s;
    let tau_d_s = profile.tau_discharge_s();
    TimingBudget {
        dt_s,
        tau_c_s,
        dt_c_s,
        max_rate_hz: 1.0 / required,
        margin_s: dt_s - required,
        recharge_period_s,
        tau_d_s,
        predicted_droop_frac: -(-recharge_period_s / tau_d_s).exp_m1(),
    }
}

/// Channels one DAC can serve when each channel needs `channel_update_rate_hz`.
///
/// Ratios within 1e-9 of an integer are snapped to it so that
/// `multiplexing_factor(a, a / n) == n` despite rounding in `a / n`.
pub fn multiplexing_factor(
    dac_rate_hz: f64,
    channel_update_rate_hz: f64,
) -> Result<u32, CompileError> {
    if !(dac_rate_hz > 0.0) || !(channel_update_rate_hz > 0.0) {
        return Err(CompileError::NonPositiveRate);
    }
    let ratio = dac_rate_hz / channel_update_rate_hz;
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= 1e-9 * nearest {
        nearest
    } else {
        ratio.floor()
    };
    if n < 1.0 {
        return Err(CompileError::UpdateRateExceedsDacRate);
    }
    Ok(n as u32)
}

/// A single problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "code")]
pub enum Violation {
    /// Settling plus charging does not fit the slot.
    TimingInfeasible { required_s: f64, available_s: f64 },
    /// A field is outside its allowed range. `bound` is the limit it broke.
    InvariantViolation {
        field: &'static str,
        value: f64,
        bound: f64,
    },
}

impl Violation {
    /// Machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::TimingInfeasible { .. } => "TimingInfeasible",
            Violation::InvariantViolation { .. } => "InvariantViolation",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TimingInfeasible {
                required_s,
                available_s,
            } => write!(
                f,
                "TimingInfeasible: required {required_s:.6e} s > available {available_s:.6e} s"
            ),
            Violation::InvariantViolation {
                field,
                value,
                bound,
            } => write!(f, "InvariantViolation: {field} = {value} (bound {bound})"),
        }
    }
}

/// Checks profile invariants and slot timing. Never fails; an empty list
/// means the profile can be compiled.
pub fn validate(profile: &HardwareProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut positive = |field: &'static str, value: f64| {
        if !(value > 0.0) || !value.is_finite() {
            out.push(Violation::InvariantViolation {
                field,
                value,
                bound: 0.0,
            });
        }
    };
    positive("dac_rate_hz", profile.dac_rate_hz);
    positive("dac_settling_s", profile.dac_settling_s);
    positive("switch_rise_s", profile.switch_rise_s);
    positive("switch_fall_s", profile.switch_fall_s);
    positive("switch_on_res_ohm", profile.switch_on_res_ohm);
    positive("hold_cap_f", profile.hold_cap_f);
    positive("amp_input_res_ohm", profile.amp_input_res_ohm);
    positive("amp_gain", profile.amp_gain);
    positive("charge_settle_multiplier", profile.charge_settle_multiplier);

    if !(profile.dac_vmax > profile.dac_vmin) {
        out.push(Violation::InvariantViolation {
            field: "dac_vmax",
            value: profile.dac_vmax,
            bound: profile.dac_vmin,
        });
    }
    if profile.dac_bits < 8 {
        out.push(Violation::InvariantViolation {
            field: "dac_bits",
            value: profile.dac_bits as f64,
            bound: 8.0,
        });
    } else if profile.dac_bits > 20 {
        out.push(Violation::InvariantViolation {
            field: "dac_bits",
            value: profile.dac_bits as f64,
            bound: 20.0,
        });
    }
    if profile.num_channels < 1 {
        out.push(Violation::InvariantViolation {
            field: "num_channels",
            value: 0.0,
            bound: 1.0,
        });
    }
    if !(profile.coupling_kappa >= 0.0) {
        out.push(Violation::InvariantViolation {
            field: "coupling_kappa",
            value: profile.coupling_kappa,
            bound: 0.0,
        });
    } else if !(profile.coupling_kappa < 1.0) {
        out.push(Violation::InvariantViolation {
            field: "coupling_kappa",
            value: profile.coupling_kappa,
            bound: 1.0,
        });
    }

    // Timing only means something once the inputs are physical.
    if out.is_empty() {
        let b = timing_budget(profile);
        if !b.is_feasible() {
            out.push(Violation::TimingInfeasible {
                required_s: b.required_s(),
                available_s: b.dt_s,
            });
        }
    }
    out
}
