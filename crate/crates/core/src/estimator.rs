//! FPGA I/O budgeting and system-level FPGA/DAC counts.
//!
//! Each DAC module on an FPGA costs its data and clock lines plus a binary
//! channel-select bus of `ceil(log2 N)` decoder lines. Synchronization
//! between FPGAs runs over the high-speed transceivers and costs no I/O.

use serde::{Deserialize, Serialize};
use thiserror::Error;

fn d_io() -> u32 {
    200
}
fn d_data() -> u32 {
    16
}
fn d_clock() -> u32 {
    1
}
fn d_epq() -> u32 {
    10
}
fn d_n() -> u32 {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformSpec {
    #[serde(default = "d_io")]
    pub fpga_io_ports: u32,
    #[serde(default = "d_data")]
    pub dac_data_lines: u32,
    #[serde(default = "d_clock")]
    pub dac_clock_lines: u32,
    #[serde(default = "d_epq")]
    pub electrodes_per_qubit: u32,
    #[serde(default = "d_n")]
    pub multiplexing_factor: u32,
}

impl Default for PlatformSpec {
    fn default() -> Self {
        Self {
            fpga_io_ports: d_io(),
            dac_data_lines: d_data(),
            dac_clock_lines: d_clock(),
            electrodes_per_qubit: d_epq(),
            multiplexing_factor: d_n(),
        }
    }
}

pub const PLATFORM_FIELDS: [&str; 5] = [
    "fpga_io_ports",
    "dac_data_lines",
    "dac_clock_lines",
    "electrodes_per_qubit",
    "multiplexing_factor",
];

impl PlatformSpec {
    /// Copy with the field called `name` set to `value`.
    pub fn with_field(&self, name: &str, value: u32) -> Result<Self, EstimateError> {
        let mut p = *self;
        match name {
            "fpga_io_ports" => p.fpga_io_ports = value,
            "dac_data_lines" => p.dac_data_lines = value,
            "dac_clock_lines" => p.dac_clock_lines = value,
            "electrodes_per_qubit" => p.electrodes_per_qubit = value,
            "multiplexing_factor" => p.multiplexing_factor = value,
            _ => return Err(EstimateError::UnknownParameter(name.to_string())),
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourcePlan {
    pub num_electrodes: u64,
    pub multiplexing_factor: u32,
    pub decoder_lines: u32,
    pub io_per_module: u32,
    pub modules_per_fpga: u32,
    pub electrodes_per_fpga: u64,
    pub num_fpgas: u64,
    /// Every module of every FPGA populated.
    pub num_dacs: u64,
    /// `ceil(electrodes / N)`: DACs actually needed.
    pub minimal_dacs: u64,
    pub num_qubits_supported: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EstimateError {
    #[error("{io_per_module} I/O lines per module exceed the FPGA's {fpga_io_ports} ports")]
    InfeasiblePlatform { io_per_module: u32, fpga_io_ports: u32 },
    #[error("unknown platform parameter {0:?}")]
    UnknownParameter(String),
    #[error("{field} must be at least 1")]
    ZeroCount { field: &'static str },
}

/// `ceil(log2 n)` for `n >= 1`.
pub fn decoder_lines(n: u32) -> u32 {
    (n.max(1) - 1).checked_ilog2().map_or(0, |b| b + 1)
}

pub fn plan_resources(num_electrodes: u64, platform: &PlatformSpec) -> Result<ResourcePlan, EstimateError> {
    if num_electrodes == 0 {
        return Err(EstimateError::ZeroCount { field: "num_electrodes" });
    }
    for (field, v) in [
        ("fpga_io_ports", platform.fpga_io_ports),
        ("dac_data_lines", platform.dac_data_lines),
        ("dac_clock_lines", platform.dac_clock_lines),
        ("electrodes_per_qubit", platform.electrodes_per_qubit),
        ("multiplexing_factor", platform.multiplexing_factor),
    ] {
        if v == 0 {
            return Err(EstimateError::ZeroCount { field });
        }
    }
    let n = platform.multiplexing_factor;
    let decoder = decoder_lines(n);
    let io_per_module = platform.dac_data_lines + platform.dac_clock_lines + decoder;
    let modules_per_fpga = platform.fpga_io_ports / io_per_module;
    if modules_per_fpga == 0 {
        return Err(EstimateError::InfeasiblePlatform {
            io_per_module,
            fpga_io_ports: platform.fpga_io_ports,
        });
    }
    let electrodes_per_fpga = modules_per_fpga as u64 * n as u64;
    let num_fpgas = num_electrodes.div_ceil(electrodes_per_fpga);
    Ok(ResourcePlan {
        num_electrodes,
        multiplexing_factor: n,
        decoder_lines: decoder,
        io_per_module,
        modules_per_fpga,
        electrodes_per_fpga,
        num_fpgas,
        num_dacs: num_fpgas * modules_per_fpga as u64,
        minimal_dacs: num_electrodes.div_ceil(n as u64),
        num_qubits_supported: num_electrodes / platform.electrodes_per_qubit as u64,
    })
}

/// One plan per value of the platform field `parameter`, in order.
pub fn sweep(
    parameter: &str,
    values: &[u32],
    num_electrodes: u64,
    platform: &PlatformSpec,
) -> Result<Vec<ResourcePlan>, EstimateError> {
    platform.with_field(parameter, platform.fpga_io_ports)?;
    values
        .iter()
        .map(|&v| plan_resources(num_electrodes, &platform.with_field(parameter, v)?))
        .collect()
}

const COLUMNS: [&str; 9] = [
    "electrodes",
    "N",
    "decoder",
    "io/module",
    "modules/fpga",
    "electrodes/fpga",
    "fpgas",
    "dacs",
    "qubits",
];

/// Aligned text table; `minimal_dacs` selects which DAC count is shown.
pub fn format_table(plans: &[ResourcePlan], minimal_dacs: bool) -> String {
    let rows: Vec<[String; 9]> = plans
        .iter()
        .map(|p| {
            [
                p.num_electrodes.to_string(),
                p.multiplexing_factor.to_string(),
                p.decoder_lines.to_string(),
                p.io_per_module.to_string(),
                p.modules_per_fpga.to_string(),
                p.electrodes_per_fpga.to_string(),
                p.num_fpgas.to_string(),
                if minimal_dacs { p.minimal_dacs } else { p.num_dacs }.to_string(),
                p.num_qubits_supported.to_string(),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|i| rows.iter().map(|r| r[i].len()).fold(COLUMNS[i].len(), usize::max))
        .collect();
    let line = |cells: &[&str]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(&COLUMNS);
    out.push('\n');
    for r in &rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        out.push_str(&line(&cells));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_thousand_electrodes() {
        let p = plan_resources(10_000, &PlatformSpec::default()).unwrap();
        assert_eq!(p.decoder_lines, 7);
        assert_eq!(p.io_per_module, 24);
        assert_eq!(p.modules_per_fpga, 8);
        assert_eq!(p.electrodes_per_fpga, 800);
        assert_eq!(p.num_fpgas, 13);
        assert_eq!(p.num_dacs, 104);
        assert_eq!(p.minimal_dacs, 100);
        assert_eq!(p.num_qubits_supported, 1000);
    }

    #[test]
    fn small_cases() {
        let p = plan_resources(800, &PlatformSpec::default()).unwrap();
        assert_eq!((p.num_fpgas, p.num_dacs), (1, 8));
        let one = PlatformSpec {
            multiplexing_factor: 1,
            ..Default::default()
        };
        let p = plan_resources(1, &one).unwrap();
        assert_eq!((p.decoder_lines, p.io_per_module, p.modules_per_fpga, p.num_fpgas), (0, 17, 11, 1));
    }

    #[test]
    fn infeasible_and_bad_input() {
        let tiny = PlatformSpec {
            fpga_io_ports: 10,
            ..Default::default()
        };
        assert!(matches!(
            plan_resources(100, &tiny),
            Err(EstimateError::InfeasiblePlatform { io_per_module: 24, .. })
        ));
        assert!(plan_resources(0, &PlatformSpec::default()).is_err());
        let zero = PlatformSpec {
            multiplexing_factor: 0,
            ..Default::default()
        };
        assert!(plan_resources(10, &zero).is_err());
    }

    #[test]
    fn sweep_multiplexing_factor() {
        let d = PlatformSpec::default();
        let plans = sweep("multiplexing_factor", &[50, 100, 200], 10_000, &d).unwrap();
        let fpgas: Vec<u64> = plans.iter().map(|p| p.num_fpgas).collect();
        assert_eq!(fpgas, vec![25, 13, 7]);
        assert!(sweep("multiplexing_factor", &[], 10_000, &d).unwrap().is_empty());
        assert_eq!(
            sweep("fpga_io_ports", &[200], 10_000, &d).unwrap()[0],
            plan_resources(10_000, &d).unwrap()
        );
        assert_eq!(
            sweep("nope", &[1], 10, &d),
            Err(EstimateError::UnknownParameter("nope".into()))
        );
        assert_eq!(sweep("nope", &[], 10, &d), Err(EstimateError::UnknownParameter("nope".into())));
    }

    #[test]
    fn decoder_lines_brute_force() {
        for n in 1..=4096u32 {
            let mut b = 0;
            while (1u64 << b) < n as u64 {
                b += 1;
            }
            assert_eq!(decoder_lines(n), b, "N={n}");
        }
    }

    #[test]
    fn table_alignment() {
        let d = PlatformSpec::default();
        let plans = sweep("multiplexing_factor", &[50, 100, 200], 10_000, &d).unwrap();
        let t = format_table(&plans, false);
        let lens: Vec<usize> = t.lines().map(str::len).collect();
        assert_eq!(lens.len(), 4);
        assert!(lens.iter().all(|&l| l == lens[0]));
        assert!(t.lines().nth(2).unwrap().contains("104"));
        assert!(format_table(&plans[1..2], true).contains("100"));
    }

    proptest! {
        #[test]
        fn ceiling_minimality(e in 1u64..2_000_000, n in 1u32..1024, io in 28u32..1000) {
            let p = PlatformSpec { multiplexing_factor: n, fpga_io_ports: io, ..Default::default() };
            let plan = plan_resources(e, &p).unwrap();
            prop_assert!((plan.num_fpgas - 1) * plan.electrodes_per_fpga < e);
            prop_assert!(e <= plan.num_fpgas * plan.electrodes_per_fpga);
            prop_assert!(plan.num_dacs * n as u64 >= e);
            prop_assert!(plan.minimal_dacs <= plan.num_dacs);
        }

        #[test]
        fn fpgas_nondecreasing(e in 1u64..1_000_000, de in 0u64..10_000) {
            let p = PlatformSpec::default();
            let a = plan_resources(e, &p).unwrap().num_fpgas;
            let b = plan_resources(e + de, &p).unwrap().num_fpgas;
            prop_assert!(a <= b);
        }
    }
}
