//! Batch analysis of a trace and its JSON report.

use serde::{Deserialize, Serialize, Serializer};

use super::filter::{design_lowpass, FilterSpec};
use super::fit::{fit_exponential_decay, DecayFit};
use super::metrics::{crosstalk_db, droop_fraction, droop_fraction_hold};
use super::settling::measure_settling_time;
use super::sine::{fit_sine, SineFit};
use super::AnalysisError;
use crate::simulator::Trace;

/// Attenuation of the 50 Ohm / 270 Ohm probe divider on the bench setup.
pub const BENCH_DIVIDER_SCALE: f64 = 50.0 / 320.0;

fn default_order() -> u32 {
    5
}

fn default_cutoff() -> f64 {
    70e3
}

fn default_tolerance() -> f64 {
    1e-3
}

/// Low-pass settings; the sample rate comes from the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterOptions {
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default = "default_cutoff")]
    pub cutoff_hz: f64,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            order: default_order(),
            cutoff_hz: default_cutoff(),
        }
    }
}

impl FilterOptions {
    pub fn at(&self, sample_rate_hz: f64) -> FilterSpec {
        FilterSpec {
            order: self.order,
            cutoff_hz: self.cutoff_hz,
            sample_rate_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisRequest {
    /// Per-channel droop; needs the recharge period.
    Droop {
        #[serde(default)]
        channels: Option<Vec<usize>>,
    },
    /// Exponential fit of each channel over `[start_s, end_s)`.
    DischargeFit {
        #[serde(default)]
        channels: Option<Vec<usize>>,
        #[serde(default)]
        start_s: f64,
        #[serde(default)]
        end_s: Option<f64>,
    },
    /// Settling of one channel, or of the DAC node when `channel` is absent.
    Settling {
        #[serde(default = "default_tolerance")]
        tolerance_frac: f64,
        #[serde(default)]
        channel: Option<usize>,
        #[serde(default)]
        start_s: f64,
        #[serde(default)]
        end_s: Option<f64>,
    },
    /// Filtered sine fit of every channel with a known frequency.
    SineFit {
        #[serde(default)]
        filter: FilterOptions,
    },
    /// Crosstalk of `aggressor` onto every other channel.
    Crosstalk {
        aggressor: usize,
        #[serde(default)]
        frequency_hz: Option<f64>,
        #[serde(default)]
        filter: FilterOptions,
    },
}

/// What the analyses need to know beyond the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisContext {
    pub recharge_period_s: Option<f64>,
    /// Per channel, the switch conduction interval as offsets within a
    /// recharge period. When known, droop is measured over hold intervals
    /// only.
    pub conduction_windows_s: Vec<(f64, f64)>,
    /// Known drive frequency per channel, if it carries a sine.
    pub sine_frequencies_hz: Vec<Option<f64>>,
    /// Multiplies every reported voltage; 1.0 reports electrode volts.
    pub divider_scale: f64,
}

impl Default for AnalysisContext {
    fn default() -> Self {
        Self {
            recharge_period_s: None,
            conduction_windows_s: Vec::new(),
            sine_frequencies_hz: Vec::new(),
            divider_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_fit: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settling_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub droop_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sine: Option<SineFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub divider_scale: f64,
    pub sample_period_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub program_hash: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dac_settling_time_s: Option<f64>,
    pub channels: Vec<ChannelReport>,
    /// `crosstalk_db[victim][aggressor]`; unmeasured pairs and silent
    /// victims are `None`, the diagonal is 0.
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_db_matrix"
    )]
    pub crosstalk_db: Option<Vec<Vec<Option<f64>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crosstalk_aggressor: Option<usize>,
}

fn round_db(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn serialize_db_matrix<S: Serializer>(
    m: &Option<Vec<Vec<Option<f64>>>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    let rounded = m.as_ref().map(|rows| {
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.filter(|x| x.is_finite()).map(round_db))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    });
    rounded.serialize(s)
}

impl AnalysisReport {
    /// Victim with the highest crosstalk from the measured aggressor.
    pub fn worst_victim(&self) -> Option<(usize, f64)> {
        let a = self.crosstalk_aggressor?;
        let m = self.crosstalk_db.as_ref()?;
        m.iter()
            .enumerate()
            .filter(|&(v, _)| v != a)
            .map(|(v, row)| (v, row[a].unwrap_or(f64::NEG_INFINITY)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
    }

    /// Two-row table of crosstalk from the aggressor onto each victim.
    pub fn crosstalk_table(&self) -> Option<String> {
        let a = self.crosstalk_aggressor?;
        let m = self.crosstalk_db.as_ref()?;
        let mut head = format!("{:<16}", "Channel");
        let mut row = format!("{:<16}", "Crosstalk (dB)");
        for (v, r) in m.iter().enumerate() {
            if v == a {
                continue;
            }
            head.push_str(&format!("{v:>9}"));
            let cell = match r[a] {
                Some(x) if x.is_finite() => format!("{:.1}", round_db(x)),
                _ => "-inf".to_string(),
            };
            row.push_str(&format!("{cell:>9}"));
        }
        Some(format!("Aggressor: channel {a}\n{head}\n{row}\n"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn window(trace: &Trace, start_s: f64, end_s: Option<f64>) -> (usize, usize) {
    let dt = trace.sample_period_s;
    let i0 = ((start_s / dt).round().max(0.0) as usize).min(trace.len());
    let i1 = end_s.map_or(trace.len(), |e| ((e / dt).round().max(0.0) as usize).min(trace.len()));
    (i0, i1.max(i0))
}

fn channel_list(trace: &Trace, channels: &Option<Vec<usize>>) -> Result<Vec<usize>, AnalysisError> {
    let n = trace.num_channels();
    match channels {
        None => Ok((0..n).collect()),
        Some(list) => {
            for &c in list {
                if c >= n {
                    return Err(AnalysisError::ChannelOutOfRange {
                        channel: c,
                        num_channels: n,
                    });
                }
            }
            Ok(list.clone())
        }
    }
}

/// Runs `requests` in order on `trace` (electrode volts times
/// `ctx.divider_scale`).
pub fn run_analyses(
    trace: &Trace,
    requests: &[AnalysisRequest],
    ctx: &AnalysisContext,
) -> Result<AnalysisReport, AnalysisError> {
    let n = trace.num_channels();
    let dt = trace.sample_period_s;
    let scale = ctx.divider_scale;
    let volts = |c: usize| -> Vec<f64> {
        trace.cap_v[c].iter().map(|v| v * trace.amp_gain * scale).collect()
    };
    let mut report = AnalysisReport {
        divider_scale: scale,
        sample_period_s: dt,
        profile_hash: trace.profile_hash.clone(),
        program_hash: trace.program_hash.clone(),
        dac_settling_time_s: None,
        channels: (0..n)
            .map(|channel| ChannelReport {
                channel,
                ..Default::default()
            })
            .collect(),
        crosstalk_db: None,
        crosstalk_aggressor: None,
    };

    for req in requests {
        match req {
            AnalysisRequest::Droop { channels } => {
                let period = ctx.recharge_period_s.ok_or_else(|| {
                    AnalysisError::MissingInput("droop needs the recharge period".into())
                })?;
                for c in channel_list(trace, channels)? {
                    let d = match ctx.conduction_windows_s.get(c) {
                        Some(&w) => droop_fraction_hold(trace, c, period, w)?,
                        None => droop_fraction(trace, c, period)?,
                    };
                    report.channels[c].droop_fraction = Some(d);
                }
            }
            AnalysisRequest::DischargeFit {
                channels,
                start_s,
                end_s,
            } => {
                let (i0, i1) = window(trace, *start_s, *end_s);
                for c in channel_list(trace, channels)? {
                    let v = volts(c);
                    report.channels[c].decay_fit = Some(fit_exponential_decay(&v[i0..i1], dt)?);
                }
            }
            AnalysisRequest::Settling {
                tolerance_frac,
                channel,
                start_s,
                end_s,
            } => {
                let (i0, i1) = window(trace, *start_s, *end_s);
                match channel {
                    Some(c) => {
                        channel_list(trace, &Some(vec![*c]))?;
                        let v = volts(*c);
                        report.channels[*c].settling_time_s =
                            Some(measure_settling_time(&v[i0..i1], dt, *tolerance_frac)?);
                    }
                    None => {
                        let d = trace.dac_v.as_ref().ok_or_else(|| {
                            AnalysisError::MissingInput("trace has no dac_v column".into())
                        })?;
                        report.dac_settling_time_s =
                            Some(measure_settling_time(&d[i0..i1], dt, *tolerance_frac)?);
                    }
                }
            }
            AnalysisRequest::SineFit { filter } => {
                let spec = filter.at(trace.sample_rate_hz());
                let lp = design_lowpass(&spec)?;
                let skip = spec.transient_samples().min(trace.len());
                for c in 0..n {
                    let Some(f) = ctx.sine_frequencies_hz.get(c).copied().flatten() else {
                        continue;
                    };
                    let y = lp.filter(&volts(c));
                    report.channels[c].sine = Some(fit_sine(&y[skip..], dt, f)?);
                }
            }
            AnalysisRequest::Crosstalk {
                aggressor,
                frequency_hz,
                filter,
            } => {
                let a = *aggressor;
                channel_list(trace, &Some(vec![a]))?;
                let f = frequency_hz
                    .or_else(|| ctx.sine_frequencies_hz.get(a).copied().flatten())
                    .ok_or_else(|| {
                        AnalysisError::MissingInput(format!(
                            "no drive frequency known for aggressor channel {a}"
                        ))
                    })?;
                let spec = filter.at(trace.sample_rate_hz());
                let agg = volts(a);
                let mut m = vec![vec![None; n]; n];
                for (v, row) in m.iter_mut().enumerate() {
                    row[v] = Some(0.0);
                    if v != a {
                        let db = crosstalk_db(&volts(v), &agg, f, &spec)?;
                        row[a] = Some(db);
                    }
                }
                report.crosstalk_db = Some(m);
                report.crosstalk_aggressor = Some(a);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn synthetic(n_ch: usize, dt: f64, n: usize, f: impl Fn(usize, f64) -> f64) -> Trace {
        let time_s: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
        Trace {
            sample_period_s: dt,
            cap_v: (0..n_ch)
                .map(|c| time_s.iter().map(|&t| f(c, t)).collect())
                .collect(),
            time_s,
            dac_v: None,
            amp_gain: 2.0,
            profile_hash: None,
            program_hash: None,
        }
    }

    #[test]
    fn discharge_fit_report() {
        let tr = synthetic(2, 1e-6, 1000, |c, t| (1.0 + c as f64) * (-t / 282.6e-6).exp());
        let req = [AnalysisRequest::DischargeFit {
            channels: None,
            start_s: 0.0,
            end_s: None,
        }];
        let r = run_analyses(&tr, &req, &AnalysisContext::default()).unwrap();
        let f1 = r.channels[1].decay_fit.unwrap();
        assert!((f1.v0 - 4.0).abs() < 1e-9);
        assert!(((f1.tau_s - 282.6e-6) / 282.6e-6).abs() < 1e-4);
    }

    #[test]
    fn crosstalk_identical_channels_is_zero_row() {
        let tr = synthetic(3, 1e-6, 400_000, |_, t| (2.0 * PI * 10e3 * t).sin());
        let req = [AnalysisRequest::Crosstalk {
            aggressor: 2,
            frequency_hz: Some(10e3),
            filter: FilterOptions::default(),
        }];
        let r = run_analyses(&tr, &req, &AnalysisContext::default()).unwrap();
        let m = r.crosstalk_db.as_ref().unwrap();
        assert!(m[0][2].unwrap().abs() < 1e-9 && m[1][2].unwrap().abs() < 1e-9);
        assert_eq!(m[2][2], Some(0.0));
        assert!(r.crosstalk_table().unwrap().contains("0.0"));
    }

    #[test]
    fn json_rounds_db_and_maps_silence_to_null() {
        let r = AnalysisReport {
            divider_scale: BENCH_DIVIDER_SCALE,
            sample_period_s: 1e-9,
            profile_hash: None,
            program_hash: None,
            dac_settling_time_s: None,
            channels: vec![],
            crosstalk_db: Some(vec![
                vec![Some(0.0), Some(-62.84)],
                vec![Some(f64::NEG_INFINITY), Some(0.0)],
            ]),
            crosstalk_aggressor: Some(1),
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["crosstalk_db"][0][1], serde_json::json!(-62.8));
        assert!(v["crosstalk_db"][1][0].is_null());
        assert_eq!(v["divider_scale"], serde_json::json!(0.15625));
    }

    #[test]
    fn missing_inputs() {
        let tr = synthetic(1, 1e-6, 100, |_, _| 1.0);
        let ctx = AnalysisContext::default();
        let e = run_analyses(&tr, &[AnalysisRequest::Droop { channels: None }], &ctx);
        assert!(matches!(e, Err(AnalysisError::MissingInput(_))));
        let e = run_analyses(
            &tr,
            &[AnalysisRequest::Crosstalk {
                aggressor: 0,
                frequency_hz: None,
                filter: FilterOptions::default(),
            }],
            &ctx,
        );
        assert!(matches!(e, Err(AnalysisError::MissingInput(_))));
        let e = run_analyses(
            &tr,
            &[AnalysisRequest::Droop {
                channels: Some(vec![3]),
            }],
            &AnalysisContext {
                recharge_period_s: Some(1e-5),
                ..Default::default()
            },
        );
        assert!(matches!(e, Err(AnalysisError::ChannelOutOfRange { .. })));
    }

    #[test]
    fn request_toml_shape() {
        #[derive(Deserialize)]
        struct W {
            analyses: Vec<AnalysisRequest>,
        }
        let w: W = toml::from_str(
            r#"
            [[analyses]]
            kind = "crosstalk"
            aggressor = 4
            filter = { order = 5, cutoff_hz = 70e3 }

            [[analyses]]
            kind = "droop"
            "#,
        )
        .unwrap();
        assert_eq!(w.analyses.len(), 2);
        assert!(matches!(w.analyses[0], AnalysisRequest::Crosstalk { aggressor: 4, .. }));
    }
}
