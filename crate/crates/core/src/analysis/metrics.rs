//! Hold droop and inter-channel crosstalk.

use super::filter::{design_lowpass, FilterSpec};
use super::sine::estimate_sine_amplitude;
use super::AnalysisError;
use crate::simulator::Trace;

/// Recharge periods skipped before droop is measured, so the first visits'
/// charging from rest are not counted as droop.
pub const DROOP_WARMUP_PERIODS: usize = 2;

/// Mean of `(max|v| - min|v|) / max|v|` over complete recharge periods of
/// `channel`, after the warm-up periods.
pub fn droop_fraction(trace: &Trace, channel: usize, recharge_period_s: f64) -> Result<f64, AnalysisError> {
    let v = trace
        .cap_v
        .get(channel)
        .ok_or(AnalysisError::ChannelOutOfRange {
            channel,
            num_channels: trace.num_channels(),
        })?;
    let per = recharge_period_s / trace.sample_period_s;
    if !(per >= 2.0) {
        return Err(AnalysisError::InvalidArgument(format!(
            "recharge period {recharge_period_s} s spans fewer than two samples"
        )));
    }
    let span_s = trace.len() as f64 * trace.sample_period_s;
    let needed_s = (DROOP_WARMUP_PERIODS + 2) as f64 * recharge_period_s;
    let bounds = |k: usize| (k as f64 * per).round() as usize;
    let mut k = DROOP_WARMUP_PERIODS;
    let mut fractions = Vec::new();
    while bounds(k + 1) <= v.len() {
        let w = &v[bounds(k)..bounds(k + 1)];
        let hi = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let lo = w.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        if hi > 0.0 {
            fractions.push((hi - lo) / hi);
        }
        k += 1;
    }
    if fractions.len() < 2 {
        return Err(AnalysisError::InsufficientSpan { span_s, needed_s });
    }
    Ok(fractions.iter().sum::<f64>() / fractions.len() as f64)
}

/// Mean droop over the hold intervals of `channel`, whose switch conducts
/// during `[conduction.0, conduction.1]` (offsets within each recharge
/// period). Each interval runs from the first sample after conduction ends
/// to the last sample before the next conduction starts, so charging
/// transients are excluded.
pub fn droop_fraction_hold(
    trace: &Trace,
    channel: usize,
    recharge_period_s: f64,
    conduction: (f64, f64),
) -> Result<f64, AnalysisError> {
    let v = trace
        .cap_v
        .get(channel)
        .ok_or(AnalysisError::ChannelOutOfRange {
            channel,
            num_channels: trace.num_channels(),
        })?;
    let dt = trace.sample_period_s;
    let (on, off) = conduction;
    if !(on >= 0.0 && off >= on && off < recharge_period_s + on) {
        return Err(AnalysisError::InvalidArgument(format!(
            "conduction window [{on}, {off}] s does not fit the recharge period"
        )));
    }
    let span_s = trace.len() as f64 * dt;
    let needed_s = (DROOP_WARMUP_PERIODS + 2) as f64 * recharge_period_s + on;
    let mut fractions = Vec::new();
    let mut k = DROOP_WARMUP_PERIODS;
    loop {
        let start = k as f64 * recharge_period_s;
        let first = (((start + off) / dt) - 1e-9).ceil() as usize;
        let last = (((start + recharge_period_s + on) / dt) + 1e-9).floor() as usize;
        if last >= v.len() {
            break;
        }
        if last > first {
            let hi = v[first].abs();
            if hi > 0.0 {
                fractions.push((hi - v[last].abs()) / hi);
            }
        }
        k += 1;
    }
    if fractions.len() < 2 {
        return Err(AnalysisError::InsufficientSpan { span_s, needed_s });
    }
    Ok(fractions.iter().sum::<f64>() / fractions.len() as f64)
}

/// Crosstalk of `aggressor` onto `victim` in dB: both are low-pass filtered
/// by `spec`, the filter transient is dropped, and the amplitudes at
/// `aggressor_freq_hz` are compared. Returns `-inf` for a silent victim.
pub fn crosstalk_db(
    victim: &[f64],
    aggressor: &[f64],
    aggressor_freq_hz: f64,
    spec: &FilterSpec,
) -> Result<f64, AnalysisError> {
    if victim.len() != aggressor.len() {
        return Err(AnalysisError::GridMismatch(format!(
            "victim has {} samples, aggressor {}",
            victim.len(),
            aggressor.len()
        )));
    }
    let lp = design_lowpass(spec)?;
    let skip = spec.transient_samples().min(victim.len());
    let dt = 1.0 / spec.sample_rate_hz;
    let a_agg = estimate_sine_amplitude(&lp.filter(aggressor)[skip..], dt, aggressor_freq_hz)?;
    if !(a_agg > 0.0) {
        return Err(AnalysisError::ZeroAggressorAmplitude);
    }
    let a_vic = estimate_sine_amplitude(&lp.filter(victim)[skip..], dt, aggressor_freq_hz)?;
    Ok(20.0 * (a_vic / a_agg).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, ChannelTarget, HardwareProfile};
    use crate::simulator::{simulate, SimConfig};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tone(a: f64, f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a * (2.0 * PI * f * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn identical_and_scaled() {
        let fs = 2e6;
        let spec = FilterSpec::default_at(fs);
        let a = tone(1.0, 10e3, fs, 1_000_000);
        assert!(crosstalk_db(&a, &a, 10e3, &spec).unwrap().abs() < 1e-9);
        let g = 10f64.powf(-62.8 / 20.0);
        let v: Vec<f64> = a.iter().map(|x| x * g).collect();
        assert!((crosstalk_db(&v, &a, 10e3, &spec).unwrap() + 62.8).abs() < 0.1);
    }

    #[test]
    fn silent_signals() {
        let fs = 2e6;
        let spec = FilterSpec::default_at(fs);
        let a = tone(1.0, 10e3, fs, 500_000);
        let z = vec![0.0; a.len()];
        assert_eq!(crosstalk_db(&z, &a, 10e3, &spec).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(
            crosstalk_db(&a, &z, 10e3, &spec),
            Err(AnalysisError::ZeroAggressorAmplitude)
        ));
        assert!(crosstalk_db(&a[1..], &a, 10e3, &spec).is_err());
    }

    #[test]
    fn droop_of_static_hold() {
        let p = HardwareProfile::design_example();
        let targets: Vec<_> = (0..100).map(|c| ChannelTarget::constant(c, 8.0)).collect();
        let prog = compile(&targets, &p, 5.0 * p.recharge_period_s()).unwrap();
        let cfg = SimConfig {
            output_sample_period_s: 2e-9,
            ..Default::default()
        };
        let tr = simulate(&prog, &cfg).unwrap();
        // Hold interval: recharge period minus the 8 ns conduction window.
        let hold = p.recharge_period_s() - 8e-9;
        let want = -(-hold / p.tau_discharge_s()).exp_m1();
        for ch in [0, 37, 99] {
            let d = droop_fraction(&tr, ch, p.recharge_period_s()).unwrap();
            assert!((d - want).abs() < 5e-5, "ch{ch}: {d} vs {want}");
            assert!((d - 0.001332).abs() < 5e-5);
        }
    }

    #[test]
    fn droop_without_discharge_path() {
        let mut p = HardwareProfile::design_example();
        p.amp_input_res_ohm = 1e300;
        p.num_channels = 4;
        p.dac_rate_hz = 2e6;
        let targets: Vec<_> = (0..4).map(|c| ChannelTarget::constant(c, 5.0)).collect();
        let prog = compile(&targets, &p, 5.0 * p.recharge_period_s()).unwrap();
        let tr = simulate(&prog, &SimConfig::default()).unwrap();
        assert!(droop_fraction(&tr, 2, p.recharge_period_s()).unwrap() < 1e-12);
    }

    #[test]
    fn droop_needs_two_periods_after_warmup() {
        let p = HardwareProfile::design_example();
        let targets: Vec<_> = (0..100).map(|c| ChannelTarget::constant(c, 8.0)).collect();
        let prog = compile(&targets, &p, 3.0 * p.recharge_period_s()).unwrap();
        let tr = simulate(&prog, &SimConfig { output_sample_period_s: 4e-9, ..Default::default() }).unwrap();
        assert!(matches!(
            droop_fraction(&tr, 0, p.recharge_period_s()),
            Err(AnalysisError::InsufficientSpan { .. })
        ));
        assert!(droop_fraction(&tr, 100, p.recharge_period_s()).is_err());
    }

    #[test]
    fn hold_droop_ignores_charging_transients() {
        let mut p = HardwareProfile::prototype();
        p.num_channels = 5;
        let mut targets: Vec<_> = (0..4).map(|c| ChannelTarget::constant(c, 20.0)).collect();
        targets.push(ChannelTarget::sine(4, 40.0, 1e6));
        let prog = compile(&targets, &p, 60.0 * p.recharge_period_s()).unwrap();
        let tr = simulate(&prog, &SimConfig::default()).unwrap();
        let dt = p.frame_period_s();
        let on = p.dac_settling_s + p.switch_rise_s;
        let off = dt - p.switch_fall_s;
        let hold = p.recharge_period_s() - (off - on);
        let want = -(-hold / p.tau_discharge_s()).exp_m1();
        let d = droop_fraction_hold(&tr, 0, p.recharge_period_s(), (on, off)).unwrap();
        assert!((d - want).abs() < 2.0 * 1e-9 / p.tau_discharge_s() + 1e-7, "{d} vs {want}");
        // The whole-period measure sees the transient after the sine channel.
        assert!(droop_fraction(&tr, 0, p.recharge_period_s()).unwrap() > want + 5e-5);
        let d3 = droop_fraction_hold(&tr, 3, p.recharge_period_s(), (3.0 * dt + on, 3.0 * dt + off)).unwrap();
        assert!((d3 - want).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn gain_identity(log_g in -5.0f64..0.0, f in 5e3f64..30e3) {
            let fs = 1e6;
            let spec = FilterSpec::default_at(fs);
            let a = tone(1.0, f, fs, 400_000);
            let g = 10f64.powf(log_g);
            let v: Vec<f64> = a.iter().map(|x| x * g).collect();
            let db = crosstalk_db(&v, &a, f, &spec).unwrap();
            prop_assert!((db - 20.0 * log_g).abs() < 0.1);
        }
    }
}
