//! Five sines at 10..30 kHz multiplexed through one DAC, recovered per
//! channel after low-pass filtering.

use tdmux::analysis::{design_lowpass, fit_sine, FilterSpec};
use tdmux::compiler::{compile, ChannelTarget, HardwareProfile};
use tdmux::simulator::{simulate, SimConfig};

fn main() {
    let mut p = HardwareProfile::prototype();
    p.amp_input_res_ohm = 9.42e6;
    let freqs = [10e3, 15e3, 20e3, 25e3, 30e3];
    let targets: Vec<_> = freqs
        .iter()
        .enumerate()
        .map(|(c, &f)| ChannelTarget::sine(c as u32, 40.0, f))
        .collect();
    let prog = compile(&targets, &p, 5e-4).unwrap();
    let cfg = SimConfig { output_sample_period_s: 5e-9, record_dac_node: false, ..Default::default() };
    let trace = simulate(&prog, &cfg).unwrap();

    let spec = FilterSpec::default_at(trace.sample_rate_hz());
    let lp = design_lowpass(&spec).unwrap();
    let skip = spec.transient_samples();
    for (c, &f) in freqs.iter().enumerate() {
        let y = lp.filter(&trace.output_v(c));
        let fit = fit_sine(&y[skip..], trace.sample_period_s, f).unwrap();
        println!(
            "ch{c}: {:>4.0} kHz  amplitude {:.3} V  offset {:+.4} V",
            f / 1e3,
            fit.amplitude_v,
            fit.offset_v
        );
    }
}
