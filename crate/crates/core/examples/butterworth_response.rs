//! Magnitude response of the default 5th-order 70 kHz low-pass.

use tdmux::analysis::{design_lowpass, FilterSpec};

fn main() {
    let spec = FilterSpec::default_at(10e6);
    let lp = design_lowpass(&spec).unwrap();
    println!("order {} cutoff {} kHz at {} Msps", spec.order, spec.cutoff_hz / 1e3, spec.sample_rate_hz / 1e6);
    for f in [1e3, 10e3, 35e3, 70e3, 140e3, 350e3, 700e3, 2e6] {
        println!("{:>8.0} Hz  {:>9.3} dB", f, lp.magnitude_db_at(f));
    }
    println!("transient discard: {} samples", spec.transient_samples());
}
