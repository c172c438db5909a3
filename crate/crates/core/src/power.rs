//! Base-station power consumption.
//!
//! Total power with `M` active antennas and `n` users is affine in `M`:
//! `P = C0 + C1 * M + A * n * R`, where `C0` collects the load-independent
//! and per-user baseband terms, `C1` the per-antenna PA and circuit draw,
//! and `A * n * R` the coding/decoding power proportional to the carried rate.

use serde::{Deserialize, Serialize};

use crate::config::{PaKind, SystemParams};
use crate::{Error, Result};

/// How the PA's maximum output power is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaMaxOutput {
    /// Exactly the PAPR back-off above the operating power.
    TiedToOperatingPower,
    /// Fixed maximum output in W.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaModel {
    pub kind: PaKind,
    /// Efficiency at maximum output, in (0, 1].
    pub max_efficiency: f64,
    /// Envelope-tracking floor parameter.
    pub epsilon: f64,
    pub papr_backoff_db: f64,
    pub max_output: PaMaxOutput,
}

impl PaModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_efficiency > 0.0 && self.max_efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!("PA efficiency {} not in (0, 1]", self.max_efficiency)));
        }
        if self.kind == PaKind::EtPa && !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("ET-PA epsilon must be positive".into()));
        }
        if let PaMaxOutput::Fixed(w) = self.max_output {
            if !(w > 0.0) {
                return Err(Error::InvalidParameter("PA maximum output must be positive".into()));
            }
        }
        Ok(())
    }

    fn backoff_ratio(&self) -> f64 {
        10f64.powf(self.papr_backoff_db / 10.0)
    }

    /// `P_max,PA` when operating at average output `p`.
    pub fn max_output_at(&self, p: f64) -> f64 {
        match self.max_output {
            PaMaxOutput::TiedToOperatingPower => p * self.backoff_ratio(),
            PaMaxOutput::Fixed(w) => w,
        }
    }

    /// Highest admissible average output for the configured maximum.
    pub fn backoff_limit(&self, p: f64) -> f64 {
        self.max_output_at(p) / self.backoff_ratio()
    }

    /// Input (DC) power drawn by one PA delivering average output `p`.
    pub fn input_power(&self, p: f64) -> Result<f64> {
        let p_max = self.max_output_at(p);
        let limit = p_max / self.backoff_ratio();
        if !(p >= 0.0) || p > limit * (1.0 + 1e-12) {
            return Err(Error::BackoffExceeded { p, limit });
        }
        Ok(match self.kind {
            PaKind::Tpa => (p * p_max).sqrt() / self.max_efficiency,
            PaKind::EtPa => (p + self.epsilon * p_max) / ((1.0 + self.epsilon) * self.max_efficiency),
        })
    }
}

/// Free-function form of [`PaModel::input_power`].
pub fn pa_input_power(p: f64, pa: &PaModel) -> Result<f64> {
    pa.input_power(p)
}

/// Baseband contributions for `n` users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasebandPower {
    /// Load-independent plus per-user terms, W.
    pub c0: f64,
    /// Per-antenna term, W per antenna.
    pub c1: f64,
    /// `(P_COD + P_DEC) * n * R`, W.
    pub rate_coding: f64,
}

pub fn baseband_power(users: u32, rate_per_user: f64, params: &SystemParams) -> BasebandPower {
    let n = f64::from(users);
    let b = params.bandwidth;
    let t_c = params.coherence;
    let l = params.l_bs;
    let c0_3 = b / (3.0 * t_c * l);
    let c1_1 = b / l * (2.0 + 1.0 / t_c);
    // Linear-processing cost per antenna and squared user count is spread
    // over the coherence interval.
    let c1_2 = 3.0 * b / (t_c * l);
    BasebandPower {
        c0: params.p_syn + c0_3 * n.powi(3),
        c1: params.p_bs + c1_1 * n + c1_2 * n * n,
        rate_coding: (params.p_cod + params.p_dec) * n * rate_per_user,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub c0: f64,
    pub c1: f64,
    pub rate_coding_term: f64,
    pub total: f64,
}

/// Affine coefficients `(C0, C1)` for `n` users, without the rate term.
pub fn affine_coefficients(users: u32, params: &SystemParams) -> Result<(f64, f64)> {
    let bb = baseband_power(users, 0.0, params);
    let pa = params.pa.input_power(params.tx_power)?;
    Ok((bb.c0 + params.p_oth, bb.c1 + pa))
}

/// Total BS power. An empty cell (`users == 0`) is switched off and draws
/// nothing; the breakdown still reports its active-idle `C0`.
pub fn total_power(
    antennas: f64,
    users: u32,
    rate_per_user: f64,
    params: &SystemParams,
    include_rate_term: bool,
) -> Result<PowerBreakdown> {
    let bb = baseband_power(users, rate_per_user, params);
    let c0 = bb.c0 + params.p_oth;
    let c1 = bb.c1 + params.pa.input_power(params.tx_power)?;
    let rate_coding_term = bb.rate_coding;
    let total =
        if users == 0 { 0.0 } else { c0 + c1 * antennas + if include_rate_term { rate_coding_term } else { 0.0 } };
    Ok(PowerBreakdown { c0, c1, rate_coding_term, total })
}

/// What an empty base station consumes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdleAccounting {
    /// All chains off, 0 W.
    #[default]
    IdleOff,
    /// Oscillator and site overhead stay on (`P_SYN + P_Oth`).
    ActiveIdle,
}

impl std::str::FromStr for IdleAccounting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "idle-off" => Ok(IdleAccounting::IdleOff),
            "active-idle" => Ok(IdleAccounting::ActiveIdle),
            other => Err(Error::InvalidParameter(format!("unknown accounting mode `{other}`"))),
        }
    }
}

pub fn idle_power(params: &SystemParams, accounting: IdleAccounting) -> f64 {
    match accounting {
        IdleAccounting::IdleOff => 0.0,
        IdleAccounting::ActiveIdle => params.p_syn + params.p_oth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use approx::assert_relative_eq;

    fn pa(kind: PaKind, max_output: PaMaxOutput) -> PaModel {
        PaModel { kind, max_efficiency: 0.8, epsilon: 0.0082, papr_backoff_db: 8.0, max_output }
    }

    #[test]
    fn tpa_at_reference_point() {
        let m = pa(PaKind::Tpa, PaMaxOutput::Fixed(0.631));
        assert_relative_eq!(m.input_power(0.1).unwrap(), 0.0631f64.sqrt() / 0.8, max_relative = 1e-12);
        assert!((m.input_power(0.1).unwrap() - 0.3140).abs() < 1e-4);
        assert_eq!(m.input_power(0.0).unwrap(), 0.0);
    }

    #[test]
    fn etpa_floor() {
        let m = pa(PaKind::EtPa, PaMaxOutput::Fixed(1.155));
        let v = m.input_power(0.0).unwrap();
        assert!((v - 0.01174).abs() < 1e-5, "{v}");
    }

    #[test]
    fn backoff_enforced() {
        let m = pa(PaKind::Tpa, PaMaxOutput::Fixed(0.631));
        // 0.631 W / 10^0.8 = 0.0999 W.
        assert!(matches!(m.input_power(0.2), Err(Error::BackoffExceeded { .. })));
        assert!(m.input_power(-1.0).is_err());
        let tied = pa(PaKind::Tpa, PaMaxOutput::TiedToOperatingPower);
        assert!(tied.input_power(3.0).is_ok());
    }

    #[test]
    fn tied_tpa_is_linear() {
        let m = pa(PaKind::Tpa, PaMaxOutput::TiedToOperatingPower);
        let k = 10f64.powf(0.4) / 0.8;
        for p in [0.01, 0.1, 0.5] {
            assert_relative_eq!(m.input_power(p).unwrap(), k * p, max_relative = 1e-12);
        }
    }

    fn params() -> SystemParams {
        SimConfig::default().system_params(PaKind::Tpa, 76, 0.1)
    }

    #[test]
    fn baseband_idle() {
        let bb = baseband_power(0, 0.0, &params());
        assert_eq!(bb.c0, 2.0);
        assert_eq!(bb.c1, 1.0);
        assert_eq!(bb.rate_coding, 0.0);
    }

    #[test]
    fn baseband_cubic_term() {
        let p = params();
        let d = baseband_power(1, 0.0, &p).c0 - baseband_power(0, 0.0, &p).c0;
        assert_relative_eq!(d, 20e6 / (3.0 * 5000.0 * 12.8e9), max_relative = 1e-9);
        assert!((d - 1.04e-7).abs() < 1e-9);
    }

    #[test]
    fn coding_term() {
        let bb = baseband_power(10, 1e8, &params());
        assert_relative_eq!(bb.rate_coding, 0.9, max_relative = 1e-12);
    }

    #[test]
    fn idle_cell_draws_nothing() {
        let b = total_power(0.0, 0, 0.0, &params(), false).unwrap();
        assert_eq!(b.total, 0.0);
        assert_eq!(b.c0, 20.0);
        assert_eq!(idle_power(&params(), IdleAccounting::ActiveIdle), 20.0);
        assert_eq!(idle_power(&params(), IdleAccounting::IdleOff), 0.0);
    }

    #[test]
    fn reference_point_pa_draw() {
        let b = total_power(158.0, 76, 0.0, &params(), false).unwrap();
        let pa_draw = 158.0 * params().pa.input_power(0.1).unwrap();
        assert!((pa_draw - 158.0 * 0.314).abs() < 0.05, "{pa_draw}");
        assert!(b.total > pa_draw);
    }

    #[test]
    fn doubling_antennas_adds_c1_m() {
        let p = params();
        let a = total_power(50.0, 20, 3e7, &p, true).unwrap();
        let b = total_power(100.0, 20, 3e7, &p, true).unwrap();
        assert_relative_eq!(b.total - a.total, a.c1 * 50.0, max_relative = 1e-12);
    }
}
