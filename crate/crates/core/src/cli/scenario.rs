//! Scenario files: one TOML document drives compile, simulate, analyze and
//! estimate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analysis::{run_analyses, AnalysisContext, AnalysisReport, AnalysisRequest};
use crate::compiler::{compile, ChannelTarget, CompileError, HardwareProfile, MuxProgram, Waveform};
use crate::estimator::{plan_resources, sweep, PlatformSpec, ResourcePlan};
use crate::simulator::{add_measurement_noise, simulate, simulate_discharge, SimConfig, Trace};

/// Bundled scenarios, by name.
pub const BUNDLED: [(&str, &str); 5] = [
    ("design_static", include_str!("../../scenarios/design_static.toml")),
    ("poc_five_sines", include_str!("../../scenarios/poc_five_sines.toml")),
    ("poc_crosstalk", include_str!("../../scenarios/poc_crosstalk.toml")),
    ("poc_discharge", include_str!("../../scenarios/poc_discharge.toml")),
    ("scaling_10k", include_str!("../../scenarios/scaling_10k.toml")),
];

fn default_divider() -> f64 {
    1.0
}

/// Free discharge of a single capacitor instead of a compiled program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DischargeSpec {
    /// Electrode voltage at t = 0.
    pub initial_v: f64,
    pub duration_s: f64,
}

/// Additive Gaussian noise on the simulated electrode voltages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub sigma_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    pub num_electrodes: u64,
    #[serde(default)]
    pub platform: PlatformSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

/// A number the scenario is expected to reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub metric: String,
    /// Channel (or sweep row for plan metrics). Absent: every channel that
    /// reports the metric, or the first plan.
    #[serde(default)]
    pub channel: Option<usize>,
    pub value: f64,
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    /// Pass when the measurement is at most `value`.
    #[serde(default)]
    pub at_most: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub profile: Option<HardwareProfile>,
    #[serde(default)]
    pub targets: Vec<ChannelTarget>,
    /// Waveform for every channel without an explicit target.
    #[serde(default)]
    pub fill_target: Option<Waveform>,
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub discharge: Option<DischargeSpec>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub analyses: Vec<AnalysisRequest>,
    #[serde(default = "default_divider")]
    pub divider_scale: f64,
    #[serde(default)]
    pub estimate: Option<EstimateSpec>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

/// Everything one scenario produced.
#[derive(Debug, Clone, Default)]
pub struct ScenarioRun {
    pub program: Option<MuxProgram>,
    pub trace: Option<Trace>,
    pub report: Option<AnalysisReport>,
    pub plans: Option<Vec<ResourcePlan>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationResult {
    pub label: String,
    pub measured: Option<f64>,
    pub expected: String,
    pub pass: bool,
}

impl Scenario {
    pub fn from_toml(src: &str) -> Result<Self, CliError> {
        let s: Scenario = toml::from_str(src).map_err(|e| CliError::Config(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    /// Reads a scenario file; `builtin:<name>` selects a bundled one.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if let Some(name) = path.to_str().and_then(|p| p.strip_prefix("builtin:")) {
            return Self::bundled(name)
                .ok_or_else(|| CliError::Config(format!("no bundled scenario named {name:?}")));
        }
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&src)
    }

    pub fn bundled(name: &str) -> Option<Self> {
        BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, src)| Self::from_toml(src).expect("bundled scenarios parse"))
    }

    fn config_err(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("scenario {}: {msg}", self.name))
    }

    /// Structural checks that do not need compilation.
    pub fn check(&self) -> Result<(), CliError> {
        let has_program = !self.targets.is_empty() || self.fill_target.is_some();
        if (has_program || self.discharge.is_some()) && self.profile.is_none() {
            return Err(self.config_err("targets and discharge need a [profile]"));
        }
        if has_program && self.discharge.is_some() {
            return Err(self.config_err("use either targets or [discharge], not both"));
        }
        if !self.analyses.is_empty() && !has_program && self.discharge.is_none() {
            return Err(self.config_err("analyses need targets or [discharge]"));
        }
        if let Some(p) = &self.profile {
            for t in &self.targets {
                if t.channel_id >= p.num_channels {
                    return Err(self.config_err(format!(
                        "target for channel {} but the profile has {} channels",
                        t.channel_id, p.num_channels
                    )));
                }
            }
        }
        let crosstalk: Vec<_> = self
            .analyses
            .iter()
            .filter_map(|a| match a {
                AnalysisRequest::Crosstalk {
                    aggressor,
                    frequency_hz,
                    ..
                } => Some((*aggressor, *frequency_hz)),
                _ => None,
            })
            .collect();
        if crosstalk.len() > 1 {
            return Err(self.config_err("at most one crosstalk analysis (one aggressor)"));
        }
        if let Some(&(aggressor, freq)) = crosstalk.first() {
            if freq.is_none() && has_program && self.sine_frequency(aggressor).is_none() {
                return Err(self.config_err(format!(
                    "crosstalk aggressor channel {aggressor} needs a sine target"
                )));
            }
        }
        if !(self.divider_scale > 0.0) {
            return Err(self.config_err("divider_scale must be positive"));
        }
        Ok(())
    }

    fn waveform(&self, channel: usize) -> Option<&Waveform> {
        self.targets
            .iter()
            .find(|t| t.channel_id as usize == channel)
            .map(|t| &t.waveform)
            .or(self.fill_target.as_ref())
    }

    fn sine_frequency(&self, channel: usize) -> Option<f64> {
        match self.waveform(channel)? {
            Waveform::Sine { frequency_hz, .. } => Some(*frequency_hz),
            _ => None,
        }
    }

    /// Explicit targets plus `fill_target` for every remaining channel.
    pub fn resolved_targets(&self) -> Result<Vec<ChannelTarget>, CliError> {
        let p = self.profile.as_ref().ok_or_else(|| self.config_err("no [profile]"))?;
        let mut out = self.targets.clone();
        if let Some(fill) = &self.fill_target {
            for c in 0..p.num_channels {
                if !self.targets.iter().any(|t| t.channel_id == c) {
                    out.push(ChannelTarget {
                        channel_id: c,
                        waveform: fill.clone(),
                    });
                }
            }
        }
        out.sort_by_key(|t| t.channel_id);
        Ok(out)
    }

    pub fn compile(&self) -> Result<MuxProgram, CliError> {
        let p = self.profile.as_ref().ok_or_else(|| self.config_err("no [profile]"))?;
        let duration = self
            .duration_s
            .ok_or_else(|| self.config_err("duration_s is required to compile"))?;
        compile(&self.resolved_targets()?, p, duration).map_err(compile_error)
    }

    /// Compiles (unless this is a discharge scenario) and simulates.
    /// `seed` overrides the scenario's seed.
    pub fn simulate(&self, seed: Option<u64>) -> Result<(Option<MuxProgram>, Trace), CliError> {
        let sim_err = |e: crate::simulator::SimError| CliError::Simulation(e.to_string());
        let (program, mut trace) = match &self.discharge {
            Some(d) => {
                let p = self.profile.as_ref().ok_or_else(|| self.config_err("no [profile]"))?;
                let t = simulate_discharge(p, d.initial_v / p.amp_gain, d.duration_s, &self.sim)
                    .map_err(sim_err)?;
                (None, t)
            }
            None => {
                let prog = self.compile()?;
                let t = simulate(&prog, &self.sim).map_err(sim_err)?;
                (Some(prog), t)
            }
        };
        if let Some(n) = &self.noise {
            let seed = seed.or(self.seed).ok_or_else(|| {
                self.config_err("noise needs an explicit seed (scenario `seed` or --seed)")
            })?;
            let sigma = n.sigma_v / trace.amp_gain;
            add_measurement_noise(&mut trace, sigma, seed);
        }
        Ok((program, trace))
    }

    pub fn analysis_context(&self) -> AnalysisContext {
        let n = self.profile.as_ref().map_or(0, |p| p.num_channels as usize);
        let sine = if self.discharge.is_some() {
            Vec::new()
        } else {
            (0..n).map(|c| self.sine_frequency(c)).collect()
        };
        let windows = match (&self.profile, &self.discharge) {
            (Some(p), None) => {
                let dt = p.frame_period_s();
                (0..n)
                    .map(|c| {
                        let start = c as f64 * dt;
                        let on = start + p.dac_settling_s + p.switch_rise_s;
                        (on, (start + dt - p.switch_fall_s).max(on))
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        AnalysisContext {
            recharge_period_s: self.profile.as_ref().map(|p| p.recharge_period_s()),
            conduction_windows_s: windows,
            sine_frequencies_hz: sine,
            divider_scale: self.divider_scale,
        }
    }

    /// Refuses traces whose embedded hashes name a different profile or
    /// program than this scenario produces.
    pub fn check_trace_provenance(&self, trace: &Trace) -> Result<(), CliError> {
        if let (Some(h), Some(p)) = (&trace.profile_hash, &self.profile) {
            if *h != p.fingerprint() {
                return Err(self.config_err(format!(
                    "trace profile hash {h} does not match scenario profile {}",
                    p.fingerprint()
                )));
            }
        }
        if let Some(h) = &trace.program_hash {
            if self.discharge.is_some() {
                return Err(self.config_err("trace comes from a compiled program, scenario is a discharge"));
            }
            let prog = self.compile()?;
            if *h != prog.fingerprint() {
                return Err(self.config_err(format!(
                    "trace program hash {h} does not match scenario program {}",
                    prog.fingerprint()
                )));
            }
        }
        Ok(())
    }

    pub fn analyze(&self, trace: &Trace) -> Result<AnalysisReport, CliError> {
        run_analyses(trace, &self.analyses, &self.analysis_context())
            .map_err(|e| CliError::Analysis(e.to_string()))
    }

    pub fn estimate(&self) -> Result<Vec<ResourcePlan>, CliError> {
        let e = self
            .estimate
            .as_ref()
            .ok_or_else(|| self.config_err("no [estimate] section"))?;
        let r = match &e.sweep {
            Some(s) => sweep(&s.parameter, &s.values, e.num_electrodes, &e.platform),
            None => plan_resources(e.num_electrodes, &e.platform).map(|p| vec![p]),
        };
        r.map_err(|err| match err {
            crate::estimator::EstimateError::UnknownParameter(_) => self.config_err(err),
            _ => CliError::Validation(vec![err.to_string()]),
        })
    }

    /// Runs every stage the scenario configures.
    pub fn run(&self, seed: Option<u64>) -> Result<ScenarioRun, CliError> {
        let mut run = ScenarioRun::default();
        let has_program = !self.targets.is_empty() || self.fill_target.is_some();
        if has_program || self.discharge.is_some() {
            let (program, trace) = self.simulate(seed)?;
            if !self.analyses.is_empty() {
                run.report = Some(self.analyze(&trace)?);
            }
            run.program = program;
            run.trace = Some(trace);
        }
        if self.estimate.is_some() {
            run.plans = Some(self.estimate()?);
        }
        Ok(run)
    }

    pub fn check_expectations(&self, run: &ScenarioRun) -> Vec<ExpectationResult> {
        let mut out = Vec::new();
        for e in &self.expect {
            let measured = measurements(&e.metric, e.channel, run);
            let expected = if e.at_most {
                format!("<= {}", e.value)
            } else if let Some(r) = e.rel_tol {
                format!("{} +/- {}%", e.value, r * 100.0)
            } else {
                format!("{} +/- {}", e.value, e.abs_tol.unwrap_or(0.0))
            };
            if measured.is_empty() {
                out.push(ExpectationResult {
                    label: e.metric.clone(),
                    measured: None,
                    expected,
                    pass: false,
                });
                continue;
            }
            for (label, m) in measured {
                let pass = if e.at_most {
                    m <= e.value
                } else {
                    let tol = e.abs_tol.unwrap_or(0.0).max(e.rel_tol.unwrap_or(0.0) * e.value.abs());
                    (m - e.value).abs() <= tol
                };
                out.push(ExpectationResult {
                    label,
                    measured: Some(m),
                    expected: expected.clone(),
                    pass,
                });
            }
        }
        out
    }
}

/// Values of `metric` in `run`, labelled.
fn measurements(metric: &str, channel: Option<usize>, run: &ScenarioRun) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    if let Some(r) = &run.report {
        let per_channel = |f: &dyn Fn(&crate::analysis::ChannelReport) -> Option<f64>| {
            r.channels
                .iter()
                .filter(|c| channel.is_none_or(|want| want == c.channel))
                .filter_map(|c| f(c).map(|v| (format!("{metric}[ch{}]", c.channel), v)))
                .collect::<Vec<_>>()
        };
        match metric {
            "droop_fraction" => out = per_channel(&|c| c.droop_fraction),
            "tau_s" => out = per_channel(&|c| c.decay_fit.map(|f| f.tau_s)),
            "sine_amplitude_v" => out = per_channel(&|c| c.sine.map(|s| s.amplitude_v)),
            "settling_time_s" => match channel {
                None => out.extend(r.dac_settling_time_s.map(|v| ("settling_time_s[dac]".into(), v))),
                Some(_) => out = per_channel(&|c| c.settling_time_s),
            },
            "crosstalk_db" => {
                if let (Some(a), Some(m)) = (r.crosstalk_aggressor, &r.crosstalk_db) {
                    for (v, row) in m.iter().enumerate() {
                        if v != a && channel.is_none_or(|want| want == v) {
                            out.push((
                                format!("crosstalk_db[ch{v}<-ch{a}]"),
                                row[a].unwrap_or(f64::NEG_INFINITY),
                            ));
                        }
                    }
                }
            }
            "worst_crosstalk_db" => {
                out.extend(r.worst_victim().map(|(v, db)| (format!("worst_crosstalk_db[ch{v}]"), db)))
            }
            "worst_victim" => {
                out.extend(r.worst_victim().map(|(v, _)| ("worst_victim".to_string(), v as f64)))
            }
            _ => {}
        }
    }
    if let Some(plans) = &run.plans {
        let row = channel.unwrap_or(0);
        if let Some(p) = plans.get(row) {
            let v = match metric {
                "decoder_lines" => Some(p.decoder_lines as f64),
                "io_per_module" => Some(p.io_per_module as f64),
                "modules_per_fpga" => Some(p.modules_per_fpga as f64),
                "electrodes_per_fpga" => Some(p.electrodes_per_fpga as f64),
                "num_fpgas" => Some(p.num_fpgas as f64),
                "num_dacs" => Some(p.num_dacs as f64),
                "minimal_dacs" => Some(p.minimal_dacs as f64),
                _ => None,
            };
            out.extend(v.map(|v| (format!("{metric}[row{row}]"), v)));
        }
    }
    out
}

pub(crate) fn compile_error(e: CompileError) -> CliError {
    match e {
        CompileError::ValidationFailed(v) => CliError::Validation(v.iter().map(|x| x.to_string()).collect()),
        CompileError::Io(e) => CliError::Io(e.to_string()),
        other => CliError::Validation(vec![other.to_string()]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse() {
        for (name, _) in BUNDLED {
            let s = Scenario::bundled(name).unwrap();
            assert_eq!(s.name, name);
        }
    }

    #[test]
    fn fill_target_covers_remaining_channels() {
        let s = Scenario::bundled("poc_crosstalk").unwrap();
        let t = s.resolved_targets().unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.iter().enumerate().all(|(i, x)| x.channel_id as usize == i));
        assert!(matches!(t[4].waveform, Waveform::Sine { .. }));
    }

    #[test]
    fn rejects_inconsistent_scenarios() {
        let bad = [
            "name = 'x'\n[fill_target]\nkind = 'constant'\nlevel = 0.0\n",
            "name = 'x'\n[[analyses]]\nkind = 'droop'\n",
            "name = 'x'\nbogus = 1\n",
        ];
        for src in bad {
            assert!(matches!(Scenario::from_toml(src), Err(CliError::Config(_))), "{src}");
        }
        let mut s = Scenario::bundled("poc_crosstalk").unwrap();
        s.targets.clear();
        s.fill_target = Some(Waveform::Constant { level: 0.0 });
        assert!(s.check().is_err());
    }

    #[test]
    fn noise_needs_a_seed() {
        let mut s = Scenario::bundled("poc_discharge").unwrap();
        s.seed = None;
        assert!(matches!(s.simulate(None), Err(CliError::Config(_))));
        let a = s.simulate(Some(3)).unwrap().1;
        let b = s.simulate(Some(3)).unwrap().1;
        assert_eq!(a, b);
    }

    #[test]
    fn scaling_expectations_hold() {
        let s = Scenario::bundled("scaling_10k").unwrap();
        let run = s.run(None).unwrap();
        let res = s.check_expectations(&run);
        assert!(!res.is_empty());
        assert!(res.iter().all(|r| r.pass), "{res:?}");
    }
}
