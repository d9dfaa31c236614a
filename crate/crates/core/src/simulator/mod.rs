//! Circuit-level evaluation of a [`MuxProgram`](crate::compiler::MuxProgram).
//!
//! The chain per frame: the DAC node relaxes toward the new code, the selected
//! channel's switch conducts for the part of the frame after settling (minus
//! rise and fall), and every other hold capacitor discharges through the
//! amplifier input. [`simulate`] evaluates this in closed form;
//! [`euler_oracle`] integrates the same equations step by step and exists
//! only to cross-check it.

mod analytic;
mod euler;
mod trace;

pub use analytic::{simulate, simulate_discharge};
pub use euler::euler_oracle;
pub use trace::Trace;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::MuxProgram;

fn default_output_period() -> f64 {
    1e-9
}

fn default_settle_tolerance() -> f64 {
    1e-3
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Spacing of the output grid.
    #[serde(default = "default_output_period")]
    pub output_sample_period_s: f64,
    /// Relative error the DAC reaches exactly `dac_settling_s` after a code
    /// change; sets the DAC time constant.
    #[serde(default = "default_settle_tolerance")]
    pub settle_tolerance: f64,
    #[serde(default = "default_true")]
    pub record_dac_node: bool,
    /// Capacitor voltages at t = 0. Empty means all zero.
    #[serde(default)]
    pub initial_cap_voltages: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            output_sample_period_s: default_output_period(),
            settle_tolerance: default_settle_tolerance(),
            record_dac_node: true,
            initial_cap_voltages: Vec::new(),
        }
    }
}

impl SimConfig {
    fn check(&self) -> Result<(), SimError> {
        if !(self.output_sample_period_s > 0.0) || !self.output_sample_period_s.is_finite() {
            return Err(SimError::InvalidConfig(
                "output_sample_period_s must be positive".into(),
            ));
        }
        if !(self.settle_tolerance > 0.0 && self.settle_tolerance < 1.0) {
            return Err(SimError::InvalidConfig(
                "settle_tolerance must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn initial_caps(&self, n: usize) -> Result<Vec<f64>, SimError> {
        match self.initial_cap_voltages.len() {
            0 => Ok(vec![0.0; n]),
            len if len == n => Ok(self.initial_cap_voltages.clone()),
            len => Err(SimError::LengthMismatch {
                expected: n,
                got: len,
            }),
        }
    }

    /// Number of grid ticks covering `[0, duration_s]` inclusive.
    fn tick_count(&self, duration_s: f64) -> usize {
        (duration_s / self.output_sample_period_s + 1e-9).floor() as usize + 1
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error("initial_cap_voltages has {got} entries, program has {expected} channels")]
    LengthMismatch { expected: usize, got: usize },
    #[error("oracle step {step_s} s exceeds tau_c/10 = {limit_s} s")]
    StepTooCoarse { step_s: f64, limit_s: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("trace parse error: {0}")]
    TraceParse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Time constants shared by both engines.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Circuit {
    pub tau_dac: f64,
    pub tau_c: f64,
    pub tau_d: f64,
    pub kappa: f64,
    pub rise: f64,
    pub fall: f64,
}

impl Circuit {
    pub(crate) fn new(program: &MuxProgram, config: &SimConfig) -> Result<Self, SimError> {
        config.check()?;
        program.check().map_err(SimError::MalformedProgram)?;
        let p = &program.profile;
        Ok(Self {
            // Within settle_tolerance of the final value at exactly dac_settling_s.
            tau_dac: p.dac_settling_s / (1.0 / config.settle_tolerance).ln(),
            tau_c: p.tau_charge_s(),
            tau_d: p.tau_discharge_s(),
            kappa: p.coupling_kappa,
            rise: p.switch_rise_s,
            fall: p.switch_fall_s,
        })
    }

    /// Conduction window `[on, off]` within a frame.
    pub(crate) fn window(&self, gate_on: f64, gate_off: f64) -> (f64, f64) {
        let on = gate_on + self.rise;
        (on, (gate_off - self.fall).max(on))
    }
}

/// Adds white Gaussian noise (standard deviation `sigma_v`, capacitor volts)
/// to every channel, reproducibly from `seed`.
pub fn add_measurement_noise(trace: &mut Trace, sigma_v: f64, seed: u64) {
    if !(sigma_v > 0.0) {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_v).expect("finite sigma");
    for ch in &mut trace.cap_v {
        for v in ch.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
}
