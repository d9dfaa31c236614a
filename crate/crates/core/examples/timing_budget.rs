//! Timing budget and multiplexing factor for the 100-channel design and the
//! five-channel prototype, plus what happens when the DAC is pushed too fast.

use tdmux::compiler::{multiplexing_factor, timing_budget, validate, HardwareProfile};

fn show(name: &str, p: &HardwareProfile) {
    let b = timing_budget(p);
    println!("{name}");
    println!("  tau_c          {:.3} ns", b.tau_c_s * 1e9);
    println!("  charge window  {:.3} ns", b.dt_c_s * 1e9);
    println!("  required slot  {:.3} ns of {:.3} ns (settle {:.1} + charge)", b.required_s() * 1e9, b.dt_s * 1e9, p.dac_settling_s * 1e9);
    println!("  max DAC rate   {:.3} MHz, margin {:.3} ns", b.max_rate_hz / 1e6, b.margin_s * 1e9);
    println!("  predicted droop {:.4}% per {:.3} us", b.predicted_droop_frac * 100.0, b.recharge_period_s * 1e6);
}

fn main() {
    let design = HardwareProfile::design_example();
    show("design example", &design);
    let n = multiplexing_factor(design.dac_rate_hz, 0.5e6).unwrap();
    println!("  N at 500 kHz per electrode: {n}");

    show("prototype", &HardwareProfile::prototype());

    let mut fast = design.clone();
    fast.dac_rate_hz = 52e6;
    for v in validate(&fast) {
        println!("52 Msps: {v}");
    }
}
