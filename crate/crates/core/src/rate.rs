//! Zero-forcing downlink rate: the closed-form per-user lower bound used by
//! every optimisation in the crate, and a Monte-Carlo estimate of the true
//! ergodic rate that the bound is checked against.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::SystemParams;
use crate::{Error, Result};

type C64 = nalgebra::Complex<f64>;

/// Operating point of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateContext {
    /// `G_cc`.
    pub own_gain: f64,
    /// `sum_{d != c} G_cd p M_d` in W; `M_d` may be fractional.
    pub interference: f64,
    pub users: u32,
    pub antennas: f64,
}

impl RateContext {
    fn check(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::NoUsers);
        }
        if self.antennas < f64::from(self.users) {
            return Err(Error::TooFewAntennas { antennas: self.antennas, users: self.users });
        }
        if !(self.interference >= 0.0) || !(self.own_gain > 0.0) {
            return Err(Error::InvalidParameter("interference and own gain must be non-negative".into()));
        }
        Ok(())
    }

    /// Noise-plus-interference denominator `sigma^2 G_cc + I`.
    pub fn denominator(&self, params: &SystemParams) -> f64 {
        params.noise_power * self.own_gain + self.interference
    }
}

/// Per-user achievable rate lower bound, bit/s.
pub fn avg_user_rate(ctx: &RateContext, params: &SystemParams) -> Result<f64> {
    ctx.check()?;
    let n = f64::from(ctx.users);
    let m = ctx.antennas;
    let sinr = params.tx_power * (m / n) * (m - n) / ctx.denominator(params);
    Ok(params.prelog() * sinr.ln_1p() / std::f64::consts::LN_2)
}

/// Single-antenna SINR `gamma = (p / n) / (sigma^2 G_cc + I)`.
pub fn sinr_single_antenna(ctx: &RateContext, params: &SystemParams) -> Result<f64> {
    ctx.check()?;
    Ok(params.tx_power / f64::from(ctx.users) / ctx.denominator(params))
}

/// Rate written through the single-antenna SINR: `beta * ln(1 - n M gamma + gamma M^2) / ln 2`.
pub fn rate_from_sinr(users: u32, antennas: f64, gamma: f64, params: &SystemParams) -> f64 {
    let n = f64::from(users);
    let arg = gamma * antennas * (antennas - n);
    params.prelog() * arg.ln_1p() / std::f64::consts::LN_2
}

/// One interfering cell in the Monte-Carlo oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interferer {
    pub antennas: usize,
    pub users: usize,
    /// Channel variance from this BS to the observed user.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSetup {
    pub users: usize,
    pub antennas: usize,
    /// Channel variance from the serving BS.
    pub own_gain: f64,
    pub interferers: Vec<Interferer>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    /// Mean ergodic rate, bit/s.
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl OracleSetup {
    /// The matching closed-form bound for this single user location.
    pub fn closed_form(&self, params: &SystemParams) -> Result<f64> {
        let interference: f64 =
            self.interferers.iter().map(|i| params.tx_power * i.antennas as f64 * i.gain / self.own_gain).sum();
        let ctx = RateContext {
            own_gain: 1.0 / self.own_gain,
            interference,
            users: self.users as u32,
            antennas: self.antennas as f64,
        };
        avg_user_rate(&ctx, params)
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

fn channel(rng: &mut ChaCha8Rng, rows: usize, cols: usize, variance: f64) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, variance))
}

/// Unit-norm zero-forcing precoders (columns) for channel rows `h`.
/// `None` if the Gram matrix is singular.
fn zf_precoder(h: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    let gram = h * h.adjoint();
    let inv = gram.cholesky()?.inverse();
    let mut w = h.adjoint() * inv;
    for mut col in w.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        col /= C64::new(norm, 0.0);
    }
    Some(w)
}

/// Monte-Carlo estimate of the ergodic ZF rate of user 0 in the observed cell.
///
/// Each trial draws i.i.d. Rayleigh channels for every user of the observed
/// cell and of every interferer, forms unit-norm ZF precoders, and uses equal
/// power `p M / n` per stream. Singular draws are redrawn.
pub fn monte_carlo_rate_oracle(setup: &OracleSetup, params: &SystemParams) -> Result<OracleEstimate> {
    let n = setup.users;
    let m = setup.antennas;
    if n == 0 || m < n + 1 {
        return Err(Error::TooFewAntennas { antennas: m as f64, users: n as u32 });
    }
    if setup.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if setup.interferers.iter().any(|i| i.users == 0 || i.antennas < i.users) {
        return Err(Error::InvalidParameter("interferers need at least one user and M_d >= K_d".into()));
    }
    let p = params.tx_power;
    let prelog = params.prelog();
    let mut rng = ChaCha8Rng::seed_from_u64(setup.seed);

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..setup.trials {
        let signal = loop {
            let h = channel(&mut rng, n, m, setup.own_gain);
            if let Some(w) = zf_precoder(&h) {
                let hk = h.row(0);
                let g = (hk * w.column(0))[(0, 0)].norm_sqr();
                break p * m as f64 / n as f64 * g;
            }
        };
        let mut interference = params.noise_power;
        for intf in &setup.interferers {
            let w_d = loop {
                let h_d = channel(&mut rng, intf.users, intf.antennas, 1.0);
                if let Some(w) = zf_precoder(&h_d) {
                    break w;
                }
            };
            let h_dk: DVector<C64> = DVector::from_fn(intf.antennas, |_, _| complex_gaussian(&mut rng, intf.gain));
            let leak: f64 = w_d.column_iter().map(|w| h_dk.dotc(&w).norm_sqr()).sum();
            interference += p * intf.antennas as f64 / intf.users as f64 * leak;
        }
        let r = prelog * (signal / interference).ln_1p() / std::f64::consts::LN_2;
        sum += r;
        sum_sq += r * r;
    }
    let t = setup.trials as f64;
    let mean = sum / t;
    let var = if setup.trials > 1 { ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0) } else { 0.0 };
    Ok(OracleEstimate { mean, std_error: (var / t).sqrt(), trials: setup.trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PaKind, SimConfig};
    use approx::assert_relative_eq;

    fn params(p: f64) -> SystemParams {
        SimConfig::default().system_params(PaKind::Tpa, 76, p)
    }

    /// Context whose denominator equals `denom` with zero noise contribution.
    fn ctx(users: u32, antennas: f64, denom: f64, params: &SystemParams) -> RateContext {
        let own_gain = 1e-3;
        RateContext { own_gain, interference: denom - params.noise_power * own_gain, users, antennas }
    }

    #[test]
    fn zero_array_gain() {
        let p = params(0.1);
        for n in [1, 5, 76] {
            assert_eq!(avg_user_rate(&ctx(n, f64::from(n), 0.2, &p), &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_evaluated_rate() {
        let p = params(0.1);
        let r = avg_user_rate(&ctx(1, 2.0, 0.2, &p), &p).unwrap();
        assert_relative_eq!(r, 17.872e6, max_relative = 1e-9);
    }

    #[test]
    fn sinr_examples() {
        let p = params(0.1);
        assert_relative_eq!(sinr_single_antenna(&ctx(1, 2.0, 0.2, &p), &p).unwrap(), 0.5, max_relative = 1e-12);
        assert_relative_eq!(sinr_single_antenna(&ctx(2, 3.0, 0.1, &p), &p).unwrap(), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn error_paths() {
        let p = params(0.1);
        assert!(matches!(avg_user_rate(&ctx(0, 2.0, 0.2, &p), &p), Err(Error::NoUsers)));
        assert!(matches!(avg_user_rate(&ctx(4, 3.0, 0.2, &p), &p), Err(Error::TooFewAntennas { .. })));
    }

    #[test]
    fn overhead_scales_linearly() {
        let p = params(0.1);
        let mut q = p.clone();
        q.coherence *= 2.0;
        let c = ctx(8, 40.0, 1.0, &p);
        let ratio = avg_user_rate(&c, &q).unwrap() / avg_user_rate(&c, &p).unwrap();
        assert_relative_eq!(ratio, q.overhead_factor() / p.overhead_factor(), max_relative = 1e-12);
    }

    #[test]
    fn oracle_is_deterministic() {
        let p = params(0.1);
        let setup = OracleSetup {
            users: 2,
            antennas: 6,
            own_gain: 1e-11,
            interferers: vec![Interferer { antennas: 6, users: 2, gain: 2e-12 }],
            trials: 1,
            seed: 42,
        };
        let a = monte_carlo_rate_oracle(&setup, &p).unwrap();
        let b = monte_carlo_rate_oracle(&setup, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_preconditions() {
        let p = params(0.1);
        let mut setup =
            OracleSetup { users: 3, antennas: 3, own_gain: 1e-11, interferers: vec![], trials: 10, seed: 1 };
        assert!(monte_carlo_rate_oracle(&setup, &p).is_err());
        setup.antennas = 4;
        setup.trials = 0;
        assert!(monte_carlo_rate_oracle(&setup, &p).is_err());
    }

    #[test]
    fn zf_nulls_intra_cell_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = channel(&mut rng, 3, 8, 1.0);
        let w = zf_precoder(&h).unwrap();
        let e = &h * &w;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(e[(i, j)].norm() < 1e-10);
                }
            }
            assert_relative_eq!(w.column(i).norm(), 1.0, max_relative = 1e-12);
        }
    }
}
