//! The `tdmux` command line: compile, simulate, analyze, estimate and demo
//! over scenario files.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 validation or
//! infeasibility, 3 simulation error, 4 analysis error.

mod scenario;

pub use scenario::{
    DischargeSpec, EstimateSpec, Expectation, ExpectationResult, NoiseSpec, Scenario, ScenarioRun, SweepSpec,
    BUNDLED,
};

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::estimator::format_table;
use crate::simulator::Trace;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("simulation error: {0}")]
    Simulation(String),
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Simulation(_) => 3,
            CliError::Analysis(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "tdmux", version, about = "Time-division multiplexed electrode control: compile, simulate, analyze, plan")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile a scenario's targets into a DAC code and gate schedule (CSV).
    Compile {
        /// Scenario TOML, or builtin:<name>.
        #[arg(long)]
        config: PathBuf,
        /// Program CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the raw little-endian 16-bit DAC stream here.
        #[arg(long)]
        binary: Option<PathBuf>,
    },
    /// Compile and simulate; writes the trace CSV.
    Simulate {
        /// Scenario TOML, or builtin:<name>.
        #[arg(long)]
        config: PathBuf,
        /// Trace CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the scenario seed for measurement noise.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the scenario's analyses on a trace CSV; writes the JSON report.
    Analyze {
        /// Trace CSV (simulated or measured).
        trace: PathBuf,
        /// Scenario that produced the trace, or describes the bench setup.
        #[arg(long)]
        config: PathBuf,
        /// JSON report; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan FPGAs and DACs for the scenario's [estimate] section.
    Estimate {
        /// Scenario TOML, or builtin:<name>.
        #[arg(long)]
        config: PathBuf,
        /// Report ceil(electrodes / N) DACs instead of fully populated FPGAs.
        #[arg(long)]
        minimal_dacs: bool,
        /// JSON plan table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every bundled scenario and compare against expected values.
    Demo {
        /// Run scenarios concurrently.
        #[arg(long)]
        parallel: bool,
        /// Directory for the programs, traces, reports and plans produced.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides every scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(cli, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs `cli`, reporting errors on `err`. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Compile {
            config,
            out: path,
            binary,
        } => cmd_compile(&config, path.as_deref(), binary.as_deref(), out),
        Command::Simulate {
            config,
            out: path,
            seed,
        } => cmd_simulate(&config, path.as_deref(), seed, out),
        Command::Analyze {
            trace,
            config,
            out: path,
        } => cmd_analyze(&trace, &config, path.as_deref(), out),
        Command::Estimate {
            config,
            minimal_dacs,
            out: path,
        } => cmd_estimate(&config, minimal_dacs, path.as_deref(), out),
        Command::Demo {
            parallel,
            out: dir,
            seed,
        } => cmd_demo(parallel, dir.as_deref(), seed, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn cmd_compile(
    config: &Path,
    out_path: Option<&Path>,
    binary: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = Scenario::load(config)?;
    let prog = s.compile()?;
    match out_path {
        Some(p) => {
            let mut w = create(p)?;
            prog.write_csv(&mut w)?;
            w.flush()?;
        }
        None => prog.write_csv(&mut *out)?,
    }
    if let Some(p) = binary {
        let mut w = create(p)?;
        prog.write_binary(&mut w).map_err(scenario::compile_error)?;
        w.flush()?;
    }
    Ok(0)
}

pub fn cmd_simulate(
    config: &Path,
    out_path: Option<&Path>,
    seed: Option<u64>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = Scenario::load(config)?;
    let (_, trace) = s.simulate(seed)?;
    match out_path {
        Some(p) => {
            let mut w = create(p)?;
            trace.write_csv(&mut w)?;
            w.flush()?;
        }
        None => trace.write_csv(&mut *out)?,
    }
    Ok(0)
}

pub fn cmd_analyze(
    trace_path: &Path,
    config: &Path,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = Scenario::load(config)?;
    let f = File::open(trace_path).map_err(|e| CliError::Config(format!("{}: {e}", trace_path.display())))?;
    let trace = Trace::read_csv(BufReader::new(f)).map_err(|e| CliError::Analysis(e.to_string()))?;
    s.check_trace_provenance(&trace)?;
    let report = s.analyze(&trace)?;
    let json = report.to_json();
    match out_path {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{json}")?;
            w.flush()?;
            if let Some(t) = report.crosstalk_table() {
                write!(out, "{t}")?;
            }
        }
        None => {
            writeln!(out, "{json}")?;
            if let Some(t) = report.crosstalk_table() {
                eprint!("{t}");
            }
        }
    }
    Ok(0)
}

pub fn cmd_estimate(
    config: &Path,
    minimal_dacs: bool,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let s = Scenario::load(config)?;
    let plans = s.estimate()?;
    write!(out, "{}", format_table(&plans, minimal_dacs))?;
    for p in &plans {
        let dacs = if minimal_dacs { p.minimal_dacs } else { p.num_dacs };
        writeln!(
            out,
            "N = {}: {} FPGAs / {} DACs for {} electrodes",
            p.multiplexing_factor, p.num_fpgas, dacs, p.num_electrodes
        )?;
    }
    if let Some(p) = out_path {
        let mut w = create(p)?;
        writeln!(w, "{}", serde_json::to_string_pretty(&plans).expect("plans serialize"))?;
        w.flush()?;
    }
    Ok(0)
}

fn fmt_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v}")
    } else {
        format!("{v:.6e}")
    }
}

fn write_artifacts(dir: &Path, s: &Scenario, run: &ScenarioRun) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    if let Some(p) = &run.program {
        let mut w = create(&dir.join(format!("{}_program.csv", s.name)))?;
        p.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(t) = &run.trace {
        let mut w = create(&dir.join(format!("{}_trace.csv", s.name)))?;
        t.write_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(r) = &run.report {
        std::fs::write(dir.join(format!("{}_report.json", s.name)), r.to_json() + "\n")?;
    }
    if let Some(plans) = &run.plans {
        let json = serde_json::to_string_pretty(plans).expect("plans serialize");
        std::fs::write(dir.join(format!("{}_plans.json", s.name)), json + "\n")?;
    }
    Ok(())
}

fn demo_one(s: &Scenario, dir: Option<&Path>, seed: Option<u64>) -> Result<Vec<ExpectationResult>, CliError> {
    let run = s.run(seed)?;
    if let Some(d) = dir {
        write_artifacts(d, s, &run)?;
    }
    Ok(s.check_expectations(&run))
}

pub fn cmd_demo(parallel: bool, dir: Option<&Path>, seed: Option<u64>, out: &mut dyn Write) -> Result<i32, CliError> {
    let scenarios: Vec<Scenario> = BUNDLED
        .iter()
        .map(|(name, _)| Scenario::bundled(name).expect("bundled"))
        .collect();
    let results: Vec<Result<Vec<ExpectationResult>, CliError>> = if parallel {
        std::thread::scope(|sc| {
            let handles: Vec<_> = scenarios
                .iter()
                .map(|s| sc.spawn(move || demo_one(s, dir, seed)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("scenario thread")).collect()
        })
    } else {
        scenarios.iter().map(|s| demo_one(s, dir, seed)).collect()
    };

    let mut worst = 0;
    writeln!(
        out,
        "{:<16} {:<34} {:>14} {:>22}  result",
        "scenario", "metric", "measured", "expected"
    )?;
    for (s, r) in scenarios.iter().zip(results) {
        match r {
            Ok(checks) => {
                for c in checks {
                    let m = c.measured.map_or("-".to_string(), fmt_value);
                    let verdict = if c.pass { "PASS" } else { "FAIL" };
                    if !c.pass {
                        worst = worst.max(4);
                    }
                    writeln!(out, "{:<16} {:<34} {:>14} {:>22}  {verdict}", s.name, c.label, m, c.expected)?;
                }
            }
            Err(e) => {
                worst = worst.max(e.exit_code());
                writeln!(out, "{:<16} error: {e}", s.name)?;
            }
        }
    }
    Ok(worst)
}
