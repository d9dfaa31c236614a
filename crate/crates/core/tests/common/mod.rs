//! Random small programs for the oracle comparisons.
#![allow(dead_code)]

use rand::Rng;
use tdmux::compiler::{compile, timing_budget, ChannelTarget, HardwareProfile, MuxProgram, Waveform};

/// A feasible profile whose time constants are all at least ~4 ns, so a
/// 1 ps forward-Euler step stays within 1e-4 of full scale.
pub fn random_profile<R: Rng>(rng: &mut R) -> HardwareProfile {
    let mut p = HardwareProfile {
        dac_rate_hz: 1.0,
        dac_bits: rng.gen_range(10..=16),
        dac_vmin: -1.0,
        dac_vmax: 1.0,
        dac_settling_s: rng.gen_range(30e-9..60e-9),
        switch_rise_s: rng.gen_range(0.5e-9..2e-9),
        switch_fall_s: rng.gen_range(0.5e-9..2e-9),
        switch_on_res_ohm: rng.gen_range(20.0..40.0),
        hold_cap_f: 200e-12,
        amp_input_res_ohm: rng.gen_range(1e5..1e7),
        amp_gain: 1.0,
        num_channels: rng.gen_range(1..=8),
        charge_settle_multiplier: rng.gen_range(3.0..6.0),
        coupling_kappa: if rng.gen_bool(0.5) { rng.gen_range(0.0..0.01) } else { 0.0 },
    };
    let b = timing_budget(&p);
    // Frame between the bare minimum and 1.5x of it.
    p.dac_rate_hz = b.max_rate_hz / rng.gen_range(1.0..1.5);
    p
}

pub fn random_program<R: Rng>(rng: &mut R) -> MuxProgram {
    let p = random_profile(rng);
    let n = p.num_channels;
    let cycles = rng.gen_range(1..=10);
    let rate = p.dac_rate_hz / n as f64;
    let targets: Vec<ChannelTarget> = (0..n)
        .map(|c| {
            let waveform = match rng.gen_range(0..3) {
                0 => Waveform::Constant { level: rng.gen_range(-1.0..1.0) },
                1 => Waveform::Sine {
                    amplitude: rng.gen_range(0.0..0.9),
                    frequency_hz: rng.gen_range(0.1..0.5) * rate,
                    phase_rad: rng.gen_range(0.0..std::f64::consts::TAU),
                    offset: rng.gen_range(-0.1..0.1),
                },
                _ => Waveform::SampleList {
                    update_rate_hz: rate,
                    samples: (0..cycles).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                },
            };
            ChannelTarget { channel_id: c, waveform }
        })
        .collect();
    compile(&targets, &p, cycles as f64 * p.recharge_period_s()).expect("random program compiles")
}
