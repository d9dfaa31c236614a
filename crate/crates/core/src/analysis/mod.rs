//! Measurements on sampled traces: decay fitting, settling, Butterworth
//! filtering, coherent sine amplitude, droop and crosstalk.

mod filter;
mod fit;
mod metrics;
mod report;
mod settling;
mod sine;

pub use filter::{apply_filter, design_lowpass, FilterSpec, Lowpass, Section};
pub use fit::{fit_exponential_decay, fit_exponential_decay_with_baseline, DecayFit, MIN_FIT_SAMPLES};
pub use metrics::{crosstalk_db, droop_fraction, droop_fraction_hold, DROOP_WARMUP_PERIODS};
pub use report::{
    run_analyses, AnalysisContext, AnalysisReport, AnalysisRequest, ChannelReport, FilterOptions,
    BENCH_DIVIDER_SCALE,
};
pub use settling::measure_settling_time;
pub use sine::{estimate_sine_amplitude, fit_sine, SineFit};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("samples must lie strictly on one side of the baseline")]
    NonPositiveSamples,
    #[error("segment does not decay")]
    NoDecay,
    #[error("no step found in trace")]
    NoStepDetected,
    #[error("cutoff {cutoff_hz} Hz is not below Nyquist {nyquist_hz} Hz")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("invalid filter: {0}")]
    InvalidFilter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("segment spans {span_s} s, need {needed_s} s (three periods)")]
    TooShortForFrequency { span_s: f64, needed_s: f64 },
    #[error("aggressor amplitude is zero")]
    ZeroAggressorAmplitude,
    #[error("trace spans {span_s} s, need {needed_s} s")]
    InsufficientSpan { span_s: f64, needed_s: f64 },
    #[error("channel {channel} out of range ({num_channels} channels)")]
    ChannelOutOfRange { channel: usize, num_channels: usize },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
