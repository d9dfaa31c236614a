//! Closed-form piecewise-exponential evaluation of the demux chain.

use crate::compiler::{dequantize, HardwareProfile, MuxProgram};

use super::{Circuit, SimConfig, SimError, Trace};

/// `(s/tau_c) * exp(-s/tau_c) * expm1(x)/x` with `x = s (1/tau_c - 1/tau_dac)`.
///
/// This is the response of an RC node (constant `tau_c`) to a unit
/// exponential `exp(-s/tau_dac)` at its input, written so that it stays
/// accurate when the two constants coincide.
fn chase(s: f64, tau_c: f64, tau_dac: f64) -> f64 {
    let x = s * (1.0 / tau_c - 1.0 / tau_dac);
    if x > 1.0 {
        // tau_c << tau_dac: no cancellation left, and expm1 could overflow.
        let scale = tau_dac / (tau_dac - tau_c);
        return scale * ((-s / tau_dac).exp() - (-s / tau_c).exp());
    }
    let phi = if x == 0.0 { 1.0 } else { x.exp_m1() / x };
    (s / tau_c) * (-s / tau_c).exp() * phi
}

/// State of the active channel's capacitor at offset `s` into a frame.
struct ActiveFrame {
    target: f64,
    dac0: f64,
    v0: f64,
    on: f64,
    off: f64,
    /// Capacitor at conduction start.
    v_on: f64,
    /// DAC error at conduction start.
    dac_err_on: f64,
    /// Capacitor just after conduction (including charge injection).
    v_off: f64,
}

impl ActiveFrame {
    fn new(c: &Circuit, target: f64, dac0: f64, v0: f64, on: f64, off: f64) -> Self {
        let v_on = v0 * (-on / c.tau_d).exp();
        let dac_err_on = (dac0 - target) * (-on / c.tau_dac).exp();
        let mut f = Self {
            target,
            dac0,
            v0,
            on,
            off,
            v_on,
            dac_err_on,
            v_off: 0.0,
        };
        let v_end = f.conducting(c, off - on);
        // Switch turn-off injects a fraction of the swing the DAC node made
        // at the start of this frame.
        f.v_off = v_end + c.kappa * (dac0 - v_end);
        f
    }

    fn conducting(&self, c: &Circuit, u: f64) -> f64 {
        self.target
            + (self.v_on - self.target) * (-u / c.tau_c).exp()
            + self.dac_err_on * chase(u, c.tau_c, c.tau_dac)
    }

    fn at(&self, c: &Circuit, s: f64) -> f64 {
        if s < self.on {
            self.v0 * (-s / c.tau_d).exp()
        } else if s < self.off {
            self.conducting(c, s - self.on)
        } else {
            self.v_off * (-(s - self.off) / c.tau_d).exp()
        }
    }

    fn dac(&self, c: &Circuit, s: f64) -> f64 {
        self.target + (self.dac0 - self.target) * (-s / c.tau_dac).exp()
    }
}

/// Evaluates the program analytically on the configured output grid.
///
/// Every segment boundary is computed from frame indices, so the result at a
/// grid time does not depend on the grid spacing.
pub fn simulate(program: &MuxProgram, config: &SimConfig) -> Result<Trace, SimError> {
    let c = Circuit::new(program, config)?;
    let p = &program.profile;
    let n_ch = p.num_channels as usize;
    let mut caps = config.initial_caps(n_ch)?;
    let dt = program.frame_period_s;
    let n_ticks = config.tick_count(program.total_duration_s);
    let period = config.output_sample_period_s;

    let mut time_s = Vec::with_capacity(n_ticks);
    let mut cap_v = vec![Vec::with_capacity(n_ticks); n_ch];
    let mut dac_v = Vec::with_capacity(if config.record_dac_node { n_ticks } else { 0 });

    let mut dac0 = 0.0;
    let mut tick = 0usize;
    let last = program.frames.len() - 1;
    for (j, frame) in program.frames.iter().enumerate() {
        let t0 = program.frame_start_s(j);
        let t_end = program.frame_start_s(j + 1);
        let active = frame.channel as usize;
        let (on, off) = c.window(frame.gate_on_offset_s, frame.gate_off_offset_s);
        let target = dequantize(frame.dac_code, p);
        let af = ActiveFrame::new(&c, target, dac0, caps[active], on, off);

        while tick < n_ticks {
            let t = tick as f64 * period;
            if t >= t_end && j != last {
                break;
            }
            let s = t - t0;
            let hold = (-s / c.tau_d).exp();
            time_s.push(t);
            for (ch, col) in cap_v.iter_mut().enumerate() {
                col.push(if ch == active { af.at(&c, s) } else { caps[ch] * hold });
            }
            if config.record_dac_node {
                dac_v.push(af.dac(&c, s));
            }
            tick += 1;
        }

        let hold = (-dt / c.tau_d).exp();
        for (ch, v) in caps.iter_mut().enumerate() {
            *v = if ch == active { af.at(&c, dt) } else { *v * hold };
        }
        dac0 = af.dac(&c, dt);
    }

    Ok(Trace {
        sample_period_s: period,
        time_s,
        cap_v,
        dac_v: config.record_dac_node.then_some(dac_v),
        amp_gain: p.amp_gain,
        profile_hash: Some(p.fingerprint()),
        program_hash: Some(program.fingerprint()),
    })
}

/// Single-channel free discharge `initial_v * exp(-t / tau_d)` from a
/// capacitor left floating on the amplifier input.
pub fn simulate_discharge(
    profile: &HardwareProfile,
    initial_v: f64,
    duration_s: f64,
    config: &SimConfig,
) -> Result<Trace, SimError> {
    config.check()?;
    if !(duration_s > 0.0) {
        return Err(SimError::InvalidConfig("duration must be positive".into()));
    }
    let tau_d = profile.tau_discharge_s();
    let n = config.tick_count(duration_s);
    let time_s: Vec<f64> = (0..n)
        .map(|i| i as f64 * config.output_sample_period_s)
        .collect();
    let v = time_s.iter().map(|t| initial_v * (-t / tau_d).exp()).collect();
    Ok(Trace {
        sample_period_s: config.output_sample_period_s,
        time_s,
        cap_v: vec![v],
        dac_v: None,
        amp_gain: profile.amp_gain,
        profile_hash: Some(profile.fingerprint()),
        program_hash: None,
    })
}
