//! Sampled voltages for the DAC node and every hold capacitor, plus the
//! CSV format shared by simulated and externally measured data.

use std::io::{BufRead, Write};

use super::SimError;

/// Uniformly sampled simulation or measurement record.
///
/// `cap_v[channel][tick]` holds capacitor (pre-gain) voltages; outputs are
/// derived as `amp_gain * cap_v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub sample_period_s: f64,
    pub time_s: Vec<f64>,
    pub cap_v: Vec<Vec<f64>>,
    pub dac_v: Option<Vec<f64>>,
    pub amp_gain: f64,
    pub profile_hash: Option<String>,
    pub program_hash: Option<String>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.time_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_s.is_empty()
    }

    pub fn num_channels(&self) -> usize {
        self.cap_v.len()
    }

    /// Electrode voltage of `channel`.
    pub fn output_v(&self, channel: usize) -> Vec<f64> {
        self.cap_v[channel].iter().map(|v| v * self.amp_gain).collect()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        1.0 / self.sample_period_s
    }

    /// Copy of ticks `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Trace {
        Trace {
            sample_period_s: self.sample_period_s,
            time_s: self.time_s[start..end].to_vec(),
            cap_v: self.cap_v.iter().map(|c| c[start..end].to_vec()).collect(),
            dac_v: self.dac_v.as_ref().map(|d| d[start..end].to_vec()),
            amp_gain: self.amp_gain,
            profile_hash: self.profile_hash.clone(),
            program_hash: self.program_hash.clone(),
        }
    }

    /// Writes `time_s,dac_v,ch0_v,...` with electrode voltages in the
    /// channel columns. Provenance goes in leading `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# amp_gain={:e}", self.amp_gain)?;
        if let Some(h) = &self.profile_hash {
            writeln!(w, "# profile_hash={h}")?;
        }
        if let Some(h) = &self.program_hash {
            writeln!(w, "# program_hash={h}")?;
        }
        let mut header = String::from("time_s");
        if self.dac_v.is_some() {
            header.push_str(",dac_v");
        }
        for c in 0..self.num_channels() {
            header.push_str(&format!(",ch{c}_v"));
        }
        writeln!(w, "{header}")?;

        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            line.push_str(&format!("{:.12e}", self.time_s[i]));
            if let Some(d) = &self.dac_v {
                line.push_str(&format!(",{:.12e}", d[i]));
            }
            for c in &self.cap_v {
                line.push_str(&format!(",{:.12e}", c[i] * self.amp_gain));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the format written by [`Trace::write_csv`]. Files without the
    /// comment block (bench captures) load with unit gain and no hashes.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Trace, SimError> {
        let mut comments = Vec::new();
        let mut body = String::new();
        for line in r.lines() {
            let line = line?;
            match line.strip_prefix('#') {
                Some(c) => comments.push(c.trim().to_string()),
                None => {
                    body.push_str(&line);
                    body.push('\n');
                }
            }
        }
        let mut amp_gain = 1.0;
        let mut profile_hash = None;
        let mut program_hash = None;
        for c in comments {
            if let Some((k, v)) = c.split_once('=') {
                match k.trim() {
                    "amp_gain" => {
                        amp_gain = v.trim().parse().map_err(|_| {
                            SimError::TraceParse(format!("bad amp_gain {v:?}"))
                        })?
                    }
                    "profile_hash" => profile_hash = Some(v.trim().to_string()),
                    "program_hash" => program_hash = Some(v.trim().to_string()),
                    _ => {}
                }
            }
        }

        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| SimError::TraceParse(e.to_string()))?
            .clone();
        if headers.get(0) != Some("time_s") {
            return Err(SimError::TraceParse("first column must be time_s".into()));
        }
        let has_dac = headers.get(1) == Some("dac_v");
        let first_ch = if has_dac { 2 } else { 1 };
        let num_ch = headers.len() - first_ch;
        for (c, name) in headers.iter().skip(first_ch).enumerate() {
            if name != format!("ch{c}_v") {
                return Err(SimError::TraceParse(format!(
                    "expected column ch{c}_v, found {name}"
                )));
            }
        }

        let mut time_s = Vec::new();
        let mut dac = Vec::new();
        let mut out: Vec<Vec<f64>> = vec![Vec::new(); num_ch];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| SimError::TraceParse(e.to_string()))?;
            let num = |i: usize| -> Result<f64, SimError> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| SimError::TraceParse(format!("row {row}, column {i}")))
            };
            time_s.push(num(0)?);
            if has_dac {
                dac.push(num(1)?);
            }
            for (c, col) in out.iter_mut().enumerate() {
                col.push(num(first_ch + c)?);
            }
        }
        if time_s.len() < 2 {
            return Err(SimError::TraceParse("need at least two rows".into()));
        }
        let n = time_s.len();
        let sample_period_s = (time_s[n - 1] - time_s[0]) / (n - 1) as f64;
        if !(sample_period_s > 0.0) {
            return Err(SimError::TraceParse("time_s must increase".into()));
        }
        for (i, w) in time_s.windows(2).enumerate() {
            if ((w[1] - w[0]) - sample_period_s).abs() > 1e-3 * sample_period_s {
                return Err(SimError::TraceParse(format!(
                    "non-uniform time grid at row {}",
                    i + 1
                )));
            }
        }
        let cap_v = out
            .into_iter()
            .map(|c| c.into_iter().map(|v| v / amp_gain).collect())
            .collect();
        Ok(Trace {
            sample_period_s,
            time_s,
            cap_v,
            dac_v: has_dac.then_some(dac),
            amp_gain,
            profile_hash,
            program_hash,
        })
    }
}
