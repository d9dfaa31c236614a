//! Closed-form simulator against a fine forward-Euler integration of the
//! same circuit.

use tdmux::compiler::{compile, ChannelTarget, HardwareProfile};
use tdmux::simulator::{euler_oracle, simulate, SimConfig};

fn main() {
    let mut p = HardwareProfile::prototype();
    p.coupling_kappa = 2e-3;
    let targets: Vec<_> = (0..p.num_channels)
        .map(|c| ChannelTarget::sine(c, 30.0, 200e3 * (c + 1) as f64))
        .collect();
    let prog = compile(&targets, &p, 10.0 * p.recharge_period_s()).unwrap();
    let cfg = SimConfig { output_sample_period_s: 0.5e-9, ..Default::default() };
    let fast = simulate(&prog, &cfg).unwrap();
    let slow = euler_oracle(&prog, &cfg, 1e-12).unwrap();
    let full_scale = p.dac_vmax - p.dac_vmin;
    for c in 0..fast.num_channels() {
        let worst = fast.cap_v[c]
            .iter()
            .zip(&slow.cap_v[c])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("ch{c}: max deviation {:.2e} of full scale", worst / full_scale);
    }
}
