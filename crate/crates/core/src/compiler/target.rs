use serde::{Deserialize, Serialize};

/// Voltage a channel should present at its electrode (after amplifier gain).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Waveform {
    Constant {
        level: f64,
    },
    Sine {
        amplitude: f64,
        frequency_hz: f64,
        #[serde(default)]
        phase_rad: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Explicit per-visit samples; one sample is consumed per visit and the
    /// last one is held once the list runs out.
    SampleList {
        update_rate_hz: f64,
        samples: Vec<f64>,
    },
}

impl Waveform {
    /// Target value at time `t_s`.
    pub fn value_at(&self, t_s: f64) -> f64 {
        match self {
            Waveform::Constant { level } => *level,
            Waveform::Sine {
                amplitude,
                frequency_hz,
                phase_rad,
                offset,
            } => offset + amplitude * (std::f64::consts::TAU * frequency_hz * t_s + phase_rad).sin(),
            Waveform::SampleList {
                update_rate_hz,
                samples,
            } => {
                if samples.is_empty() {
                    return 0.0;
                }
                // Visit k of channel c starts at (kN + c)/A, i.e. k + c/N
                // update periods in; the slack absorbs rounding at c = 0.
                let idx = (t_s * update_rate_hz + 1e-9).floor().max(0.0) as usize;
                samples[idx.min(samples.len() - 1)]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelTarget {
    pub channel_id: u32,
    pub waveform: Waveform,
}

impl ChannelTarget {
    pub fn constant(channel_id: u32, level: f64) -> Self {
        Self {
            channel_id,
            waveform: Waveform::Constant { level },
        }
    }

    pub fn sine(channel_id: u32, amplitude: f64, frequency_hz: f64) -> Self {
        Self {
            channel_id,
            waveform: Waveform::Sine {
                amplitude,
                frequency_hz,
                phase_rad: 0.0,
                offset: 0.0,
            },
        }
    }
}
