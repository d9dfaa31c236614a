//! DAC output settling after a full-scale step, for several tolerances.

use tdmux::analysis::measure_settling_time;
use tdmux::compiler::{compile, ChannelTarget, HardwareProfile};
use tdmux::simulator::{simulate, SimConfig};

fn main() {
    let p = HardwareProfile::prototype();
    let targets: Vec<_> = (0..p.num_channels)
        .map(|c| ChannelTarget::constant(c, if c == 1 { 45.0 } else { -45.0 }))
        .collect();
    let prog = compile(&targets, &p, p.recharge_period_s()).unwrap();
    let dt = 0.05e-9;
    let cfg = SimConfig { output_sample_period_s: dt, ..Default::default() };
    let dac = simulate(&prog, &cfg).unwrap().dac_v.unwrap();
    let a = (prog.frame_start_s(1) / dt).round() as usize - 4;
    let b = (prog.frame_start_s(2) / dt).round() as usize;
    for tol in [1e-1, 1e-2, 1e-3] {
        let ts = measure_settling_time(&dac[a..b], dt, tol).unwrap();
        println!("within {:>5}% after {:.2} ns", tol * 100.0, ts * 1e9);
    }
    println!("rated settling time {:.1} ns", p.dac_settling_s * 1e9);
}
