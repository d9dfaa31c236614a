//! Fixed-step forward-Euler integration of the demux circuit.
//!
//! Shares nothing with the analytic engine beyond [`Circuit`]'s time
//! constants: every node is advanced by explicit steps of at most `step_s`,
//! split so that gate edges and output ticks land on step boundaries.

use crate::compiler::{dequantize, MuxProgram};

use super::{Circuit, SimConfig, SimError, Trace};

struct State {
    dac: f64,
    caps: Vec<f64>,
}

impl State {
    /// Advances `len` seconds. `conducting` is the channel whose switch is
    /// closed for the whole interval, if any.
    fn advance(&mut self, c: &Circuit, target: f64, conducting: Option<usize>, len: f64, step_s: f64) {
        if len <= 0.0 {
            return;
        }
        let n = (len / step_s).ceil().max(1.0) as usize;
        let h = len / n as f64;
        for _ in 0..n {
            let dac = self.dac;
            for (ch, v) in self.caps.iter_mut().enumerate() {
                let dv = if Some(ch) == conducting {
                    (dac - *v) / c.tau_c
                } else {
                    -*v / c.tau_d
                };
                *v += h * dv;
            }
            self.dac += h * (target - dac) / c.tau_dac;
        }
    }
}

/// Integrates `program` with forward Euler at a step no larger than
/// `step_s`, sampling on the same grid as [`super::simulate`].
pub fn euler_oracle(
    program: &MuxProgram,
    config: &SimConfig,
    step_s: f64,
) -> Result<Trace, SimError> {
    let c = Circuit::new(program, config)?;
    let limit_s = c.tau_c / 10.0;
    if !(step_s > 0.0) || step_s > limit_s {
        return Err(SimError::StepTooCoarse { step_s, limit_s });
    }
    let p = &program.profile;
    let n_ch = p.num_channels as usize;
    let mut st = State {
        dac: 0.0,
        caps: config.initial_caps(n_ch)?,
    };
    let period = config.output_sample_period_s;
    let n_ticks = config.tick_count(program.total_duration_s);

    let mut time_s = Vec::with_capacity(n_ticks);
    let mut cap_v = vec![Vec::with_capacity(n_ticks); n_ch];
    let mut dac_v = Vec::new();
    let mut tick = 0usize;
    let last = program.frames.len() - 1;

    for (j, frame) in program.frames.iter().enumerate() {
        let t0 = program.frame_start_s(j);
        let t_end = program.frame_start_s(j + 1);
        let active = frame.channel as usize;
        let (on, off) = c.window(frame.gate_on_offset_s, frame.gate_off_offset_s);
        let target = dequantize(frame.dac_code, p);
        let dac_at_start = st.dac;

        // Offsets inside the frame where something happens, in order.
        let mut events: Vec<(f64, Event)> = vec![
            (on, Event::GateOn),
            (off, Event::GateOff),
            (program.frame_period_s, Event::End),
        ];
        while tick < n_ticks {
            let t = tick as f64 * period;
            if t >= t_end && j != last {
                break;
            }
            events.push((t - t0, Event::Tick(t)));
            tick += 1;
        }
        // Ticks at an edge are recorded after the edge takes effect.
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.rank().cmp(&b.1.rank())));

        let mut s = 0.0;
        let mut switch_closed = false;
        for (at, ev) in events {
            let conducting = switch_closed.then_some(active);
            st.advance(&c, target, conducting, at - s, step_s);
            s = s.max(at);
            match ev {
                Event::GateOn => switch_closed = on < off,
                Event::GateOff => {
                    switch_closed = false;
                    let v = &mut st.caps[active];
                    *v += c.kappa * (dac_at_start - *v);
                }
                Event::End => {}
                Event::Tick(t) => {
                    time_s.push(t);
                    for (ch, col) in cap_v.iter_mut().enumerate() {
                        col.push(st.caps[ch]);
                    }
                    if config.record_dac_node {
                        dac_v.push(st.dac);
                    }
                }
            }
        }
        // The last frame may have run past its end to reach the final tick;
        // any other frame stops exactly at frame_period_s.
        if s < program.frame_period_s {
            st.advance(&c, target, None, program.frame_period_s - s, step_s);
        }
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

#[derive(Debug, Clone, Copy)]
enum Event {
    GateOn,
    GateOff,
    End,
    Tick(f64),
}

impl Event {
    fn rank(&self) -> u8 {
        match self {
            Event::GateOn | Event::GateOff | Event::End => 0,
            Event::Tick(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::{compile, ChannelTarget, HardwareProfile};
    use crate::simulator::simulate;

    fn slow_profile(n: u32) -> HardwareProfile {
        HardwareProfile {
            dac_rate_hz: 8e6,
            dac_bits: 12,
            dac_vmin: -1.0,
            dac_vmax: 1.0,
            dac_settling_s: 40e-9,
            switch_rise_s: 1e-9,
            switch_fall_s: 1e-9,
            switch_on_res_ohm: 25.0,
            hold_cap_f: 200e-12,
            amp_input_res_ohm: 1e6,
            amp_gain: 1.0,
            num_channels: n,
            charge_settle_multiplier: 5.0,
            coupling_kappa: 0.0,
        }
    }

    #[test]
    fn zero_program_stays_zero() {
        let mut p = slow_profile(3);
        // 1 V steps so that code 128 is exactly 0 V.
        p.dac_bits = 8;
        p.dac_vmin = -128.0;
        p.dac_vmax = 127.0;
        let targets: Vec<_> = (0..3).map(|c| ChannelTarget::constant(c, 0.0)).collect();
        let prog = compile(&targets, &p, 2.0 * p.recharge_period_s()).unwrap();
        let cfg = SimConfig::default();
        let a = simulate(&prog, &cfg).unwrap();
        let e = euler_oracle(&prog, &cfg, 1e-12).unwrap();
        for c in 0..3 {
            assert!(a.cap_v[c].iter().all(|&v| v == 0.0));
            assert!(e.cap_v[c].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn step_limit() {
        let p = slow_profile(1);
        let prog = compile(&[ChannelTarget::constant(0, 0.5)], &p, 1.0 / 8e6).unwrap();
        let limit = p.tau_charge_s() / 10.0;
        assert!(matches!(
            euler_oracle(&prog, &SimConfig::default(), limit * 1.01),
            Err(SimError::StepTooCoarse { .. })
        ));
        assert!(euler_oracle(&prog, &SimConfig::default(), 0.0).is_err());
    }

    #[test]
    fn single_frame_matches_closed_form() {
        // Closed form of the one-frame response, derived independently:
        // DAC d(s) = V(1 - e^{-s/td}); during conduction the capacitor solves
        // v' = (d - v)/tc from v(on) = 0.
        let p = slow_profile(1);
        let prog = compile(&[ChannelTarget::constant(0, 0.8)], &p, 1.0 / 8e6).unwrap();
        let v = dequantize(prog.frames[0].dac_code, &p);
        let td = p.dac_settling_s / 1e3f64.ln();
        let tc = p.tau_charge_s();
        let on = 41e-9;
        let off = 124e-9;
        let closed = |s: f64| {
            let u = s - on;
            let b = -v * (-on / td).exp();
            let big_b = b * td / (td - tc);
            v + big_b * (-u / td).exp() + (0.0 - v - big_b) * (-u / tc).exp()
        };
        let cfg = SimConfig {
            output_sample_period_s: 5e-9,
            ..Default::default()
        };
        let e = euler_oracle(&prog, &cfg, 1e-15).unwrap();
        for (i, &t) in e.time_s.iter().enumerate() {
            if t > on && t < off {
                assert!((e.cap_v[0][i] - closed(t)).abs() < 1e-6, "t={t}");
            }
        }
        let a = simulate(&prog, &cfg).unwrap();
        for i in 0..a.len() {
            assert!((a.cap_v[0][i] - e.cap_v[0][i]).abs() < 1e-6);
        }
    }

    #[test]
    fn agrees_with_analytic_with_coupling() {
        let mut p = slow_profile(4);
        p.coupling_kappa = 0.02;
        let targets = vec![
            ChannelTarget::constant(0, 0.2),
            ChannelTarget::sine(1, 0.7, 1e6),
            ChannelTarget::constant(2, -0.9),
            ChannelTarget::constant(3, 0.95),
        ];
        let prog = compile(&targets, &p, 3.0 * p.recharge_period_s()).unwrap();
        let cfg = SimConfig::default();
        let a = simulate(&prog, &cfg).unwrap();
        let e = euler_oracle(&prog, &cfg, 1e-12).unwrap();
        assert_eq!(a.time_s, e.time_s);
        let mut worst: f64 = 0.0;
        for c in 0..4 {
            for i in 0..a.len() {
                worst = worst.max((a.cap_v[c][i] - e.cap_v[c][i]).abs());
            }
        }
        assert!(worst < 1e-4 * 2.0, "worst {worst}");
    }
}
