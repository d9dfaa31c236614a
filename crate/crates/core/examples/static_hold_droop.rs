//! Static hold on all 100 channels of the design example: the worst-case
//! droop between refreshes against the closed-form prediction.

use tdmux::analysis::droop_fraction_hold;
use tdmux::compiler::{compile, timing_budget, ChannelTarget, HardwareProfile};
use tdmux::simulator::{simulate, SimConfig};

fn main() {
    let p = HardwareProfile::design_example();
    let targets: Vec<_> = (0..p.num_channels).map(|c| ChannelTarget::constant(c, 8.0)).collect();
    let prog = compile(&targets, &p, 5.0 * p.recharge_period_s()).unwrap();
    let cfg = SimConfig { output_sample_period_s: 2e-9, record_dac_node: false, ..Default::default() };
    let trace = simulate(&prog, &cfg).unwrap();

    let predicted = timing_budget(&p).predicted_droop_frac;
    let dt = p.frame_period_s();
    for c in [0usize, 50, 99] {
        let start = c as f64 * dt;
        let window = (start + p.dac_settling_s + p.switch_rise_s, start + dt - p.switch_fall_s);
        let d = droop_fraction_hold(&trace, c, p.recharge_period_s(), window).unwrap();
        println!("ch{c:<3} droop {:.4}%  (predicted {:.4}%)", d * 100.0, predicted * 100.0);
    }
}
