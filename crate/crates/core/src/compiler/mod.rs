//! Timing feasibility checks and compilation of per-channel targets into a
//! time-division-multiplexed DAC stream with a gate schedule.
//!
//! One DAC at rate `A` serves `N` channels round-robin. Each frame lasts
//! `1/A`: the DAC is given the channel's code, allowed `dac_settling_s` to
//! settle, and then the channel's switch conducts until the frame ends.

mod budget;
mod profile;
mod program;
mod quantize;
mod target;

pub use budget::{multiplexing_factor, timing_budget, validate, TimingBudget, Violation};
pub use profile::HardwareProfile;
pub use program::{compile, Frame, MuxProgram};
pub use quantize::{dequantize, quantize};
pub use target::{ChannelTarget, Waveform};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("rates must be positive")]
    NonPositiveRate,
    #[error("channel update rate exceeds the DAC rate")]
    UpdateRateExceedsDacRate,
    #[error("voltage {voltage} V outside DAC range [{vmin}, {vmax}] V")]
    VoltageOutOfRange { voltage: f64, vmin: f64, vmax: f64 },
    #[error("profile failed validation: {}", join(.0))]
    ValidationFailed(Vec<Violation>),
    #[error("no target for channel {0}")]
    MissingChannelTarget(u32),
    #[error("more than one target for channel {0}")]
    DuplicateChannelTarget(u32),
    #[error("target for channel {channel} but the profile has {num_channels} channels")]
    ChannelOutOfRange { channel: u32, num_channels: u32 },
    #[error("channel {channel} target is {voltage} V at t = {time_s} s, outside the amplified DAC range")]
    TargetOutOfRange {
        channel: u32,
        time_s: f64,
        voltage: f64,
    },
    #[error("duration {duration_s} s is not a positive multiple of the recharge period {recharge_period_s} s")]
    InvalidDuration {
        duration_s: f64,
        recharge_period_s: f64,
    },
    #[error("channel {channel} sample list runs at {update_rate_hz} Hz, expected {expected_hz} Hz")]
    SampleRateMismatch {
        channel: u32,
        update_rate_hz: f64,
        expected_hz: f64,
    },
    #[error("{bits}-bit codes do not fit the 16-bit binary stream")]
    CodeTooWide { bits: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
