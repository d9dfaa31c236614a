//! Compiles mixed targets onto the prototype and prints the first frames of
//! the resulting program.

use tdmux::compiler::{compile, ChannelTarget, HardwareProfile, Waveform};

fn main() {
    let p = HardwareProfile::prototype();
    let targets = vec![
        ChannelTarget::constant(0, 12.5),
        ChannelTarget::sine(1, 40.0, 20e3),
        ChannelTarget::constant(2, -7.0),
        ChannelTarget {
            channel_id: 3,
            waveform: Waveform::SampleList {
                update_rate_hz: p.dac_rate_hz / p.num_channels as f64,
                samples: vec![0.0, 10.0, 20.0, 30.0],
            },
        },
        ChannelTarget::constant(4, 0.0),
    ];
    let prog = compile(&targets, &p, 20.0 * p.recharge_period_s()).unwrap();
    println!("{} frames, frame {:.2} ns, fingerprint {}", prog.frames.len(), prog.frame_period_s * 1e9, prog.fingerprint());
    let mut out = Vec::new();
    prog.write_csv(&mut out).unwrap();
    for line in String::from_utf8(out).unwrap().lines().take(16) {
        println!("{line}");
    }
}
