//! Free discharge of a prototype hold capacitor with measurement noise, and
//! the fitted time constant over several noise seeds.

use tdmux::analysis::fit_exponential_decay;
use tdmux::compiler::HardwareProfile;
use tdmux::simulator::{add_measurement_noise, simulate_discharge, SimConfig};

fn main() {
    let p = HardwareProfile::prototype();
    let cfg = SimConfig { output_sample_period_s: 100e-9, record_dac_node: false, ..Default::default() };
    let clean = simulate_discharge(&p, 40.0 / p.amp_gain, 1e-3, &cfg).unwrap();
    println!("true tau {:.2} us", p.tau_discharge_s() * 1e6);
    for seed in 0..5 {
        let mut tr = clean.clone();
        add_measurement_noise(&mut tr, 0.04 / p.amp_gain, seed);
        let fit = fit_exponential_decay(&tr.output_v(0), tr.sample_period_s).unwrap();
        println!(
            "seed {seed}: tau {:.2} us, V0 {:.3} V, residual {:.1} mV",
            fit.tau_s * 1e6,
            fit.v0,
            fit.residual_rms_v * 1e3
        );
    }
}
