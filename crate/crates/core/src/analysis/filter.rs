//! Butterworth low-pass design (bilinear transform with prewarping) and
//! causal filtering of traces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::AnalysisError;
use crate::simulator::Trace;

fn default_order() -> u32 {
    5
}

fn default_cutoff() -> f64 {
    70e3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    #[serde(default = "default_order")]
    pub order: u32,
    /// -3 dB frequency.
    #[serde(default = "default_cutoff")]
    pub cutoff_hz: f64,
    pub sample_rate_hz: f64,
}

impl FilterSpec {
    /// Fifth order, 70 kHz, at `sample_rate_hz`.
    pub fn default_at(sample_rate_hz: f64) -> Self {
        Self {
            order: default_order(),
            cutoff_hz: default_cutoff(),
            sample_rate_hz,
        }
    }

    /// Samples after which the impulse response of the slowest pole pair
    /// has fallen below 1e-6 of its peak envelope.
    pub fn transient_samples(&self) -> usize {
        let slowest = (PI / (2.0 * self.order as f64)).sin();
        let secs = 1e6f64.ln() / (2.0 * PI * self.cutoff_hz * slowest);
        (secs * self.sample_rate_hz).ceil() as usize
    }
}

/// One cascade stage. `b`/`a` are the z-domain coefficients (a0 = 1);
/// `g` and `zeta` drive the state-variable realization used for filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Section {
    First { b: [f64; 2], a1: f64, g: f64 },
    Second { b: [f64; 3], a: [f64; 2], g: f64, zeta: f64 },
}

impl Section {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        match *self {
            Section::First { b, a1, .. } => (b[0] + b[1] * z_inv) / (1.0 + a1 * z_inv),
            Section::Second { b, a, .. } => {
                let z2 = z_inv * z_inv;
                (b[0] + b[1] * z_inv + b[2] * z2) / (1.0 + a[0] * z_inv + a[1] * z2)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lowpass {
    pub spec: FilterSpec,
    pub sections: Vec<Section>,
}

/// Designs the Butterworth cascade for `spec`: one second-order section
/// per conjugate pole pair plus a first-order section for odd orders.
pub fn design_lowpass(spec: &FilterSpec) -> Result<Lowpass, AnalysisError> {
    if spec.order == 0 {
        return Err(AnalysisError::InvalidFilter("order must be at least 1".into()));
    }
    if !(spec.sample_rate_hz > 0.0) || !(spec.cutoff_hz > 0.0) {
        return Err(AnalysisError::InvalidFilter(
            "cutoff and sample rate must be positive".into(),
        ));
    }
    let nyquist_hz = spec.sample_rate_hz / 2.0;
    if spec.cutoff_hz >= nyquist_hz {
        return Err(AnalysisError::CutoffAboveNyquist {
            cutoff_hz: spec.cutoff_hz,
            nyquist_hz,
        });
    }
    let n = spec.order;
    let k = (PI * spec.cutoff_hz / spec.sample_rate_hz).tan();
    let k2 = k * k;
    let mut sections = Vec::new();
    for i in 1..=n / 2 {
        let zeta = ((2 * i - 1) as f64 * PI / (2 * n) as f64).sin();
        let a0 = 1.0 + 2.0 * zeta * k + k2;
        sections.push(Section::Second {
            b: [k2 / a0, 2.0 * k2 / a0, k2 / a0],
            a: [2.0 * (k2 - 1.0) / a0, (1.0 - 2.0 * zeta * k + k2) / a0],
            g: k,
            zeta,
        });
    }
    if n % 2 == 1 {
        sections.push(Section::First {
            b: [k / (1.0 + k), k / (1.0 + k)],
            a1: (k - 1.0) / (k + 1.0),
            g: k,
        });
    }
    Ok(Lowpass {
        spec: *spec,
        sections,
    })
}

impl Lowpass {
    pub fn response_at(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.spec.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |h, s| h * s.response(z_inv))
    }

    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        self.response_at(freq_hz).norm()
    }

    pub fn magnitude_db_at(&self, freq_hz: f64) -> f64 {
        20.0 * self.magnitude_at(freq_hz).log10()
    }

    /// Causal filtering from zero state.
    ///
    /// Runs each stage as a topology-preserving state-variable filter, which
    /// is the same transfer function as the direct-form coefficients but
    /// stays accurate when the cutoff is a tiny fraction of the sample rate.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            match *s {
                Section::First { g, .. } => {
                    let gain = g / (1.0 + g);
                    let mut st = 0.0;
                    for v in y.iter_mut() {
                        let d = (*v - st) * gain;
                        let lp = d + st;
                        st = lp + d;
                        *v = lp;
                    }
                }
                Section::Second { g, zeta, .. } => {
                    let norm = 1.0 / (1.0 + 2.0 * zeta * g + g * g);
                    let (mut s1, mut s2) = (0.0, 0.0);
                    for v in y.iter_mut() {
                        let hp = (*v - (2.0 * zeta + g) * s1 - s2) * norm;
                        let v1 = g * hp;
                        let bp = v1 + s1;
                        s1 = bp + v1;
                        let v2 = g * bp;
                        let lp = v2 + s2;
                        s2 = lp + v2;
                        *v = lp;
                    }
                }
            }
        }
        y
    }
}

/// Filters every channel (and the DAC node, if present) of `trace`.
pub fn apply_filter(filter: &Lowpass, trace: &Trace) -> Result<Trace, AnalysisError> {
    let want = filter.spec.sample_rate_hz;
    let got = trace.sample_rate_hz();
    if ((got - want) / want).abs() > 1e-6 {
        return Err(AnalysisError::GridMismatch(format!(
            "trace sampled at {got} Hz, filter designed for {want} Hz"
        )));
    }
    let mut out = trace.clone();
    for ch in &mut out.cap_v {
        *ch = filter.filter(ch);
    }
    if let Some(d) = &mut out.dac_v {
        *d = filter.filter(d);
    }
    Ok(out)
}
