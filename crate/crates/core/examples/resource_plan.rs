//! Control hardware for 10,000 electrodes, and how it scales with the
//! multiplexing factor.

use tdmux::estimator::{format_table, plan_resources, sweep, PlatformSpec};

fn main() {
    let platform = PlatformSpec::default();
    let plan = plan_resources(10_000, &platform).unwrap();
    println!(
        "{} electrodes: {} FPGAs, {} DACs ({} if the last FPGA is trimmed), {} qubits",
        plan.num_electrodes, plan.num_fpgas, plan.num_dacs, plan.minimal_dacs, plan.num_qubits_supported
    );
    let plans = sweep("multiplexing_factor", &[1, 10, 50, 100, 200, 500], 10_000, &platform).unwrap();
    print!("{}", format_table(&plans, false));
}
