//! Electrical description of one DAC + demultiplexer control unit.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

fn default_charge_settle_multiplier() -> f64 {
    5.0
}

/// All physical parameters of a single high-speed DAC driving `num_channels`
/// hold capacitors through a switch network.
///
/// Fields are plain SI values so a profile can be read directly from a
/// configuration file. Construction does not check invariants; call
/// [`crate::compiler::validate`] to get the list of violations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareProfile {
    /// DAC sampling rate (samples/s).
    pub dac_rate_hz: f64,
    pub dac_bits: u32,
    pub dac_vmin: f64,
    pub dac_vmax: f64,
    /// Time for the DAC output to reach its final value after a new code.
    pub dac_settling_s: f64,
    pub switch_rise_s: f64,
    pub switch_fall_s: f64,
    pub switch_on_res_ohm: f64,
    /// Per-channel hold capacitance.
    pub hold_cap_f: f64,
    /// Input impedance of the output amplifier; the only discharge path.
    pub amp_input_res_ohm: f64,
    pub amp_gain: f64,
    /// Multiplexing factor: channels served by this DAC.
    pub num_channels: u32,
    /// Number of switch RC constants allotted to charging.
    #[serde(default = "default_charge_settle_multiplier")]
    pub charge_settle_multiplier: f64,
    /// Fraction of the DAC swing coupled onto a hold capacitor at each
    /// switch event. Zero disables charge injection.
    #[serde(default)]
    pub coupling_kappa: f64,
}

impl HardwareProfile {
    /// 100-channel unit on a 50 Msps DAC with 150 pF holds and a 10 MOhm
    /// amplifier input. Charging needs 19.5 ns of the 20 ns slot.
    pub fn design_example() -> Self {
        Self {
            dac_rate_hz: 50e6,
            dac_bits: 16,
            dac_vmin: -1.0,
            dac_vmax: 1.0,
            dac_settling_s: 10e-9,
            switch_rise_s: 1e-9,
            switch_fall_s: 1e-9,
            switch_on_res_ohm: 10.0,
            hold_cap_f: 150e-12,
            amp_input_res_ohm: 10e6,
            amp_gain: 10.0,
            num_channels: 100,
            charge_settle_multiplier: 5.0,
            coupling_kappa: 0.0,
        }
    }

    /// Five-channel bench prototype: 14-bit DAC at 30 Msps, 30 pF holds,
    /// x50 output stage (+/-50 V) and the measured 20 ns settling time.
    ///
    /// The amplifier input resistance is chosen so that C * R matches the
    /// measured 282.6 us discharge constant.
    pub fn prototype() -> Self {
        Self {
            dac_rate_hz: 30e6,
            dac_bits: 14,
            dac_vmin: -1.0,
            dac_vmax: 1.0,
            dac_settling_s: 20e-9,
            switch_rise_s: 1e-9,
            switch_fall_s: 1e-9,
            switch_on_res_ohm: 10.0,
            hold_cap_f: 30e-12,
            amp_input_res_ohm: 282.6e-6 / 30e-12,
            amp_gain: 50.0,
            num_channels: 5,
            charge_settle_multiplier: 5.0,
            coupling_kappa: 0.0,
        }
    }

    /// Duration of one DAC sample slot.
    pub fn frame_period_s(&self) -> f64 {
        1.0 / self.dac_rate_hz
    }

    /// Interval between successive visits to the same channel.
    pub fn recharge_period_s(&self) -> f64 {
        self.num_channels as f64 / self.dac_rate_hz
    }

    /// Switch RC constant.
    pub fn tau_charge_s(&self) -> f64 {
        self.hold_cap_f * self.switch_on_res_ohm
    }

    /// Hold discharge constant through the amplifier input.
    pub fn tau_discharge_s(&self) -> f64 {
        self.hold_cap_f * self.amp_input_res_ohm
    }

    /// Largest DAC code.
    pub fn max_code(&self) -> u32 {
        ((1u64 << self.dac_bits) - 1) as u32
    }

    /// Quantization step in DAC volts.
    pub fn lsb_v(&self) -> f64 {
        (self.dac_vmax - self.dac_vmin) / self.max_code() as f64
    }

    /// Short stable digest of every field, used to tie traces back to the
    /// profile that produced them.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        self.feed(&mut h);
        short_hex(&h.finalize())
    }

    pub(crate) fn feed(&self, h: &mut Sha256) {
        for v in [
            self.dac_rate_hz,
            self.dac_vmin,
            self.dac_vmax,
            self.dac_settling_s,
            self.switch_rise_s,
            self.switch_fall_s,
            self.switch_on_res_ohm,
            self.hold_cap_f,
            self.amp_input_res_ohm,
            self.amp_gain,
            self.charge_settle_multiplier,
            self.coupling_kappa,
        ] {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(self.dac_bits.to_le_bytes());
        h.update(self.num_channels.to_le_bytes());
    }
}

pub(crate) fn short_hex(digest: &[u8]) -> String {
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants() {
        let p = HardwareProfile::design_example();
        assert!((p.tau_charge_s() - 1.5e-9).abs() < 1e-21);
        assert!((p.tau_discharge_s() - 1.5e-3).abs() < 1e-15);
        assert!((p.recharge_period_s() - 2e-6).abs() < 1e-18);
        assert_eq!(p.max_code(), 65535);

        let poc = HardwareProfile::prototype();
        assert!((poc.tau_discharge_s() - 282.6e-6).abs() < 1e-15);
    }

    #[test]
    fn fingerprint_tracks_fields() {
        let a = HardwareProfile::prototype();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.coupling_kappa = 1e-3;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    #[test]
    fn toml_defaults() {
        let src = r#"
            dac_rate_hz = 30e6
            dac_bits = 14
            dac_vmin = -1.0
            dac_vmax = 1.0
            dac_settling_s = 20e-9
            switch_rise_s = 1e-9
            switch_fall_s = 1e-9
            switch_on_res_ohm = 10.0
            hold_cap_f = 30e-12
            amp_input_res_ohm = 9.42e6
            amp_gain = 50.0
            num_channels = 5
        "#;
        let p: HardwareProfile = toml::from_str(src).unwrap();
        assert_eq!(p.charge_settle_multiplier, 5.0);
        assert_eq!(p.coupling_kappa, 0.0);
    }
}
