//! Simulation constants and the runtime parameter bundle.
//!
//! [`SimConfig`] is the JSON-facing configuration. Its keys follow the
//! names of the physical constants (bandwidth, noise, coherence interval,
//! circuit powers, ...) and every key has a default, so `{}` is a valid
//! config file. [`SystemParams`] is the resolved bundle the models consume
//! once the PA type, the user cap and the per-antenna power are fixed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::power::{PaMaxOutput, PaModel};
use crate::{Error, Result};

/// Power amplifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaKind {
    /// Traditional amplifier, efficiency peaks at maximum output.
    Tpa,
    /// Envelope-tracking amplifier.
    EtPa,
}

impl fmt::Display for PaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PaKind::Tpa => "tpa",
            PaKind::EtPa => "etpa",
        })
    }
}

impl FromStr for PaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tpa" => Ok(PaKind::Tpa),
            "etpa" | "et-pa" => Ok(PaKind::EtPa),
            other => Err(Error::InvalidParameter(format!("unknown PA kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub num_cells: usize,
    pub grid_size: usize,
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub max_pa_efficiency: f64,
    pub pathloss_coeff: f64,
    pub pathloss_exponent: f64,
    pub p_syn_w: f64,
    pub p_bs_w: f64,
    pub p_oth_w: f64,
    pub p_cod_w_per_gbps: f64,
    pub p_dec_w_per_gbps: f64,
    pub l_bs_gflops_per_w: f64,
    pub bandwidth_hz: f64,
    pub total_noise_power_dbm: f64,
    pub coherence_symbols: f64,
    pub pilot_reuse: f64,
    pub et_pa_epsilon: f64,
    pub papr_backoff_db: f64,
    /// Fixed PA maximum output in W. `None` ties it to the operating power
    /// plus the PAPR back-off.
    pub pa_max_output_w: Option<f64>,
    /// Traffic volume per user in bits; absorbed by the arrival-rate calibration.
    pub per_user_bits: f64,
    pub target_blocking: f64,
    pub min_load_fraction: f64,
    pub max_users_search: u32,
    pub max_antennas_search: u32,
    pub p_search_min_w: f64,
    pub p_search_max_w: f64,
    pub p_grid_points: usize,
    pub max_sweeps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            num_cells: 19,
            grid_size: 15_000,
            cell_radius_m: 500.0,
            min_distance_m: 35.0,
            max_pa_efficiency: 0.8,
            pathloss_coeff: 10f64.powf(-3.53),
            pathloss_exponent: 3.76,
            p_syn_w: 2.0,
            p_bs_w: 1.0,
            p_oth_w: 18.0,
            p_cod_w_per_gbps: 0.1,
            p_dec_w_per_gbps: 0.8,
            l_bs_gflops_per_w: 12.8,
            bandwidth_hz: 20e6,
            total_noise_power_dbm: -96.0,
            coherence_symbols: 5000.0,
            pilot_reuse: 7.0,
            et_pa_epsilon: 0.0082,
            papr_backoff_db: 8.0,
            pa_max_output_w: None,
            per_user_bits: 1e8,
            target_blocking: 0.02,
            min_load_fraction: 0.10,
            max_users_search: 256,
            max_antennas_search: 512,
            p_search_min_w: 1e-3,
            p_search_max_w: 4.0,
            p_grid_points: 1024,
            max_sweeps: 1000,
        }
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.total_noise_power_dbm - 30.0) / 10.0)
    }

    pub fn pa_model(&self, kind: PaKind) -> PaModel {
        PaModel {
            kind,
            max_efficiency: self.max_pa_efficiency,
            epsilon: self.et_pa_epsilon,
            papr_backoff_db: self.papr_backoff_db,
            max_output: match self.pa_max_output_w {
                Some(w) => PaMaxOutput::Fixed(w),
                None => PaMaxOutput::TiedToOperatingPower,
            },
        }
    }

    /// Resolves the runtime parameters for a PA type, user cap and per-antenna power.
    pub fn system_params(&self, kind: PaKind, k_max: u32, tx_power: f64) -> SystemParams {
        SystemParams {
            bandwidth: self.bandwidth_hz,
            noise_power: self.noise_power_w(),
            coherence: self.coherence_symbols,
            pilot_reuse: self.pilot_reuse,
            k_max,
            tx_power,
            pa: self.pa_model(kind),
            p_syn: self.p_syn_w,
            p_bs: self.p_bs_w,
            p_oth: self.p_oth_w,
            p_cod: self.p_cod_w_per_gbps * 1e-9,
            p_dec: self.p_dec_w_per_gbps * 1e-9,
            l_bs: self.l_bs_gflops_per_w * 1e9,
        }
    }
}

/// Resolved constants consumed by the rate and power models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Hz.
    pub bandwidth: f64,
    /// Total noise power over the band, W.
    pub noise_power: f64,
    /// Coherence interval, symbols.
    pub coherence: f64,
    pub pilot_reuse: f64,
    pub k_max: u32,
    /// Average transmit power per antenna, W.
    pub tx_power: f64,
    pub pa: PaModel,
    pub p_syn: f64,
    pub p_bs: f64,
    pub p_oth: f64,
    /// W per bit/s.
    pub p_cod: f64,
    /// W per bit/s.
    pub p_dec: f64,
    /// flops per W.
    pub l_bs: f64,
}

impl SystemParams {
    /// Fraction of the coherence interval left after pilots.
    pub fn overhead_factor(&self) -> f64 {
        1.0 - self.pilot_reuse * f64::from(self.k_max) / self.coherence
    }

    /// Rate pre-log factor `B (1 - alpha K_max / T_c)` in bit/s.
    pub fn prelog(&self) -> f64 {
        self.bandwidth * self.overhead_factor()
    }

    pub fn validate(&self) -> Result<()> {
        let pilots = self.pilot_reuse * f64::from(self.k_max);
        if pilots >= self.coherence {
            return Err(Error::PilotOverhead { pilots, coherence: self.coherence });
        }
        if !(self.bandwidth > 0.0) {
            return Err(Error::InvalidParameter("bandwidth must be positive".into()));
        }
        let powers = [self.noise_power, self.tx_power, self.p_syn, self.p_bs, self.p_oth, self.p_cod, self.p_dec];
        if powers.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter("powers must be non-negative".into()));
        }
        if !(self.l_bs > 0.0) {
            return Err(Error::InvalidParameter("computational efficiency must be positive".into()));
        }
        self.pa.validate()
    }

    pub fn with_tx_power(&self, tx_power: f64) -> Self {
        SystemParams { tx_power, ..self.clone() }
    }

    pub fn with_k_max(&self, k_max: u32) -> Self {
        SystemParams { k_max, ..self.clone() }
    }
}
