//! The compiled, frame-accurate DAC + gate schedule.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::budget::validate;
use super::profile::{short_hex, HardwareProfile};
use super::quantize::quantize;
use super::target::{ChannelTarget, Waveform};
use super::CompileError;

/// One DAC sample slot dedicated to a single channel.
///
/// Gate offsets are relative to the start of the frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frame {
    pub dac_code: u32,
    pub channel: u32,
    pub gate_on_offset_s: f64,
    pub gate_off_offset_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuxProgram {
    pub profile: HardwareProfile,
    pub frames: Vec<Frame>,
    pub frame_period_s: f64,
    pub total_duration_s: f64,
}

impl MuxProgram {
    /// Start time of frame `j`. Computed from the index, not accumulated.
    pub fn frame_start_s(&self, j: usize) -> f64 {
        j as f64 * self.frame_period_s
    }

    /// Checks the structural invariants every consumer relies on: round-robin
    /// order, gate window inside the settled part of the slot, codes in range.
    pub fn check(&self) -> Result<(), String> {
        let p = &self.profile;
        let n = p.num_channels.max(1);
        if self.frames.is_empty() {
            return Err("program has no frames".into());
        }
        if (self.frame_period_s - p.frame_period_s()).abs() > 1e-12 * p.frame_period_s() {
            return Err(format!(
                "frame period {} does not match 1/dac_rate_hz {}",
                self.frame_period_s,
                p.frame_period_s()
            ));
        }
        let max_code = p.max_code();
        // Small absolute slack for offsets written through text formats.
        let eps = 1e-6 * self.frame_period_s;
        for (j, f) in self.frames.iter().enumerate() {
            if f.channel != j as u32 % n {
                return Err(format!(
                    "frame {j} drives channel {} but round-robin expects {}",
                    f.channel,
                    j as u32 % n
                ));
            }
            if f.dac_code > max_code {
                return Err(format!("frame {j}: code {} exceeds {max_code}", f.dac_code));
            }
            if f.gate_on_offset_s < p.dac_settling_s - eps
                || f.gate_off_offset_s > self.frame_period_s + eps
                || f.gate_off_offset_s <= f.gate_on_offset_s
            {
                return Err(format!(
                    "frame {j}: gate window [{}, {}] outside [{}, {}]",
                    f.gate_on_offset_s, f.gate_off_offset_s, p.dac_settling_s, self.frame_period_s
                ));
            }
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        self.profile.feed(&mut h);
        for f in &self.frames {
            h.update(f.dac_code.to_le_bytes());
            h.update(f.channel.to_le_bytes());
            h.update(f.gate_on_offset_s.to_bits().to_le_bytes());
            h.update(f.gate_off_offset_s.to_bits().to_le_bytes());
        }
        short_hex(&h.finalize())
    }

    /// `frame_index,time_s,channel,dac_code,gate_on_s,gate_off_s`, with gate
    /// times absolute (frame start plus offset).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "frame_index,time_s,channel,dac_code,gate_on_s,gate_off_s")?;
        for (j, f) in self.frames.iter().enumerate() {
            let t = self.frame_start_s(j);
            writeln!(
                w,
                "{j},{:.12e},{},{},{:.12e},{:.12e}",
                t,
                f.channel,
                f.dac_code,
                t + f.gate_on_offset_s,
                t + f.gate_off_offset_s
            )?;
        }
        Ok(())
    }

    /// Packed little-endian 16-bit codes, left-justified when the DAC is
    /// narrower than 16 bits.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), CompileError> {
        let bits = self.profile.dac_bits;
        if bits > 16 {
            return Err(CompileError::CodeTooWide { bits });
        }
        let shift = 16 - bits;
        let mut buf = Vec::with_capacity(self.frames.len() * 2);
        for f in &self.frames {
            buf.extend_from_slice(&((f.dac_code << shift) as u16).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }
}

/// Compiles one target per channel into a round-robin program covering
/// `duration_s`, which must be a whole number of recharge periods.
///
/// Targets are electrode voltages; each is divided by the amplifier gain,
/// sampled at the frame start and quantized.
pub fn compile(
    targets: &[ChannelTarget],
    profile: &HardwareProfile,
    duration_s: f64,
) -> Result<MuxProgram, CompileError> {
    let violations = validate(profile);
    if !violations.is_empty() {
        return Err(CompileError::ValidationFailed(violations));
    }

    let n = profile.num_channels;
    let frames_f = duration_s * profile.dac_rate_hz;
    let frame_count = frames_f.round();
    if !(duration_s > 0.0)
        || !frames_f.is_finite()
        || (frames_f - frame_count).abs() > 1e-6 * frame_count.max(1.0)
        || frame_count < 1.0
        || !(frame_count as u64).is_multiple_of(n as u64)
    {
        return Err(CompileError::InvalidDuration {
            duration_s,
            recharge_period_s: profile.recharge_period_s(),
        });
    }
    let frame_count = frame_count as usize;

    let mut by_channel: BTreeMap<u32, &Waveform> = BTreeMap::new();
    for t in targets {
        if t.channel_id >= n {
            return Err(CompileError::ChannelOutOfRange {
                channel: t.channel_id,
                num_channels: n,
            });
        }
        if by_channel.insert(t.channel_id, &t.waveform).is_some() {
            return Err(CompileError::DuplicateChannelTarget(t.channel_id));
        }
        if let Waveform::SampleList { update_rate_hz, .. } = &t.waveform {
            let expected = profile.dac_rate_hz / n as f64;
            if (update_rate_hz - expected).abs() > 1e-9 * expected {
                return Err(CompileError::SampleRateMismatch {
                    channel: t.channel_id,
                    update_rate_hz: *update_rate_hz,
                    expected_hz: expected,
                });
            }
        }
    }
    let waveforms: Vec<&Waveform> = (0..n)
        .map(|c| {
            by_channel
                .get(&c)
                .copied()
                .ok_or(CompileError::MissingChannelTarget(c))
        })
        .collect::<Result<_, _>>()?;

    let dt = profile.frame_period_s();
    let mut frames = Vec::with_capacity(frame_count);
    for j in 0..frame_count {
        let channel = (j % n as usize) as u32;
        let t = j as f64 * dt;
        let electrode_v = waveforms[channel as usize].value_at(t);
        let dac_code = quantize(electrode_v / profile.amp_gain, profile).map_err(|_| {
            CompileError::TargetOutOfRange {
                channel,
                time_s: t,
                voltage: electrode_v,
            }
        })?;
        frames.push(Frame {
            dac_code,
            channel,
            gate_on_offset_s: profile.dac_settling_s,
            gate_off_offset_s: dt,
        });
    }

    Ok(MuxProgram {
        profile: profile.clone(),
        frames,
        frame_period_s: dt,
        total_duration_s: frame_count as f64 * dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::quantize::dequantize;
    use proptest::prelude::*;

    fn five_constants() -> Vec<ChannelTarget> {
        (0..5)
            .map(|c| ChannelTarget::constant(c, -40.0 + 20.0 * c as f64))
            .collect()
    }

    #[test]
    fn constant_targets_cycle_fixed_codes() {
        let p = HardwareProfile::prototype();
        let prog = compile(&five_constants(), &p, 1e-6).unwrap();
        assert_eq!(prog.frames.len(), 30);
        prog.check().unwrap();
        for (j, f) in prog.frames.iter().enumerate() {
            assert_eq!(f.channel as usize, j % 5);
            assert_eq!(f.dac_code, prog.frames[j % 5].dac_code);
            assert_eq!(f.gate_on_offset_s, p.dac_settling_s);
            assert_eq!(f.gate_off_offset_s, prog.frame_period_s);
            let v = dequantize(f.dac_code, &p) * p.amp_gain;
            let target = -40.0 + 20.0 * f.channel as f64;
            assert!((v - target).abs() <= p.lsb_v() / 2.0 * p.amp_gain + 1e-9);
        }
        let codes: std::collections::BTreeSet<u32> =
            prog.frames.iter().map(|f| f.dac_code).collect();
        assert_eq!(codes.len(), 5);
    }

    #[test]
    fn five_sines_interleave() {
        let p = HardwareProfile::prototype();
        let targets: Vec<ChannelTarget> = (0..5)
            .map(|c| ChannelTarget::sine(c, 40.0, 1e6 * (c + 1) as f64))
            .collect();
        let prog = compile(&targets, &p, 3e-6).unwrap();
        assert_eq!(prog.frames.len(), 90);
        // Each channel's sub-stream is its own sine, sampled once per visit.
        for c in 0..5usize {
            for k in 0..18usize {
                let j = k * 5 + c;
                let t = j as f64 / 30e6;
                let want = 40.0 * (std::f64::consts::TAU * 1e6 * (c + 1) as f64 * t).sin();
                let got = dequantize(prog.frames[j].dac_code, &p) * p.amp_gain;
                assert!((got - want).abs() <= p.lsb_v() * p.amp_gain);
            }
        }
    }

    #[test]
    fn single_channel_identity() {
        let mut p = HardwareProfile::prototype();
        p.num_channels = 1;
        let prog = compile(&[ChannelTarget::constant(0, 0.0)], &p, 1e-6).unwrap();
        let code = quantize(0.0, &p).unwrap();
        assert!(prog.frames.iter().all(|f| f.dac_code == code && f.channel == 0));
    }

    #[test]
    fn errors() {
        let p = HardwareProfile::prototype();
        let t = five_constants();
        assert!(matches!(
            compile(&t[..4], &p, 1e-6),
            Err(CompileError::MissingChannelTarget(4))
        ));
        let mut dup = t.clone();
        dup[4].channel_id = 3;
        assert!(matches!(
            compile(&dup, &p, 1e-6),
            Err(CompileError::DuplicateChannelTarget(3))
        ));
        let mut hot = t.clone();
        hot[2] = ChannelTarget::constant(2, 51.0);
        assert!(matches!(
            compile(&hot, &p, 1e-6),
            Err(CompileError::TargetOutOfRange { channel: 2, .. })
        ));
        assert!(matches!(
            compile(&t, &p, 0.0),
            Err(CompileError::InvalidDuration { .. })
        ));
        // 1/30 us is one frame, not a whole cycle.
        assert!(matches!(
            compile(&t, &p, 1.0 / 30e6),
            Err(CompileError::InvalidDuration { .. })
        ));
        let mut fast = p.clone();
        fast.dac_rate_hz = 50e6;
        assert!(matches!(
            compile(&t, &fast, 1e-6),
            Err(CompileError::ValidationFailed(_))
        ));
        let mut list = t.clone();
        list[0].waveform = Waveform::SampleList {
            update_rate_hz: 5e6,
            samples: vec![0.0],
        };
        assert!(matches!(
            compile(&list, &p, 1e-6),
            Err(CompileError::SampleRateMismatch { channel: 0, .. })
        ));
    }

    #[test]
    fn csv_and_binary_exports() {
        let p = HardwareProfile::prototype();
        let prog = compile(&five_constants(), &p, 1.0 / 6e6).unwrap();
        let mut csv = Vec::new();
        prog.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "frame_index,time_s,channel,dac_code,gate_on_s,gate_off_s");
        assert_eq!(lines.len(), 6);
        let row1: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(row1[0], "1");
        assert_eq!(row1[2], "1");
        let t1: f64 = row1[1].parse().unwrap();
        let on: f64 = row1[4].parse().unwrap();
        assert!((t1 - 1.0 / 30e6).abs() < 1e-18);
        assert!((on - t1 - 20e-9).abs() < 1e-18);

        let mut bin = Vec::new();
        prog.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 10);
        for (j, f) in prog.frames.iter().enumerate() {
            let word = u16::from_le_bytes([bin[2 * j], bin[2 * j + 1]]);
            assert_eq!(word & 0b11, 0);
            assert_eq!((word >> 2) as u32, f.dac_code);
        }

        let mut wide = prog.clone();
        wide.profile.dac_bits = 18;
        assert!(matches!(
            wide.write_binary(Vec::new()),
            Err(CompileError::CodeTooWide { bits: 18 })
        ));
    }

    #[test]
    fn check_rejects_broken_programs() {
        let p = HardwareProfile::prototype();
        let prog = compile(&five_constants(), &p, 1e-6).unwrap();
        let mut swapped = prog.clone();
        swapped.frames.swap(0, 1);
        assert!(swapped.check().is_err());
        let mut early = prog.clone();
        early.frames[3].gate_on_offset_s = 5e-9;
        assert!(early.check().is_err());
        let mut late = prog.clone();
        late.frames[3].gate_off_offset_s = 40e-9;
        assert!(late.check().is_err());
        let mut big = prog;
        big.frames[0].dac_code = 1 << 14;
        assert!(big.check().is_err());
    }

    proptest! {
        #[test]
        fn deterministic_and_round_robin(levels in prop::collection::vec(-50.0f64..50.0, 5),
                                         cycles in 1usize..20) {
            let p = HardwareProfile::prototype();
            let targets: Vec<ChannelTarget> = levels.iter().enumerate()
                .map(|(c, &l)| ChannelTarget::constant(c as u32, l)).collect();
            let duration = cycles as f64 * p.recharge_period_s();
            let a = compile(&targets, &p, duration).unwrap();
            let b = compile(&targets, &p, duration).unwrap();
            let (mut ca, mut cb) = (Vec::new(), Vec::new());
            a.write_csv(&mut ca).unwrap();
            b.write_csv(&mut cb).unwrap();
            prop_assert_eq!(ca, cb);
            prop_assert_eq!(a.fingerprint(), b.fingerprint());
            prop_assert_eq!(a.frames.len(), (duration * p.dac_rate_hz).round() as usize);
            for (j, f) in a.frames.iter().enumerate() {
                prop_assert_eq!(f.channel as usize, j % 5);
                prop_assert!(f.gate_on_offset_s >= p.dac_settling_s);
                prop_assert!(f.gate_off_offset_s <= a.frame_period_s);
                prop_assert!(f.dac_code <= p.max_code());
                let v = dequantize(f.dac_code, &p) * p.amp_gain;
                prop_assert!((v - levels[f.channel as usize]).abs()
                    <= p.lsb_v() / 2.0 * p.amp_gain + 1e-9);
            }
        }
    }
}
