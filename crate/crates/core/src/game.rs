//! Energy-efficiency game between base stations.
//!
//! Every cell chooses, for each number of simultaneously served users `n`,
//! how many antennas `M(n)` to activate. For fixed interference the
//! per-state utility is
//!
//! ```text
//! E(M) = n * beta * ln(1 + gamma * M * (M - n)) / (C0 + C1 * M)
//! ```
//!
//! with `gamma` the single-antenna SINR. The coding term proportional to the
//! carried rate is left out of the denominator: it does not move the
//! maximiser (see [`ratio_argmax_matches`]). Cells see each other only
//! through the state-weighted mean antenna count of their neighbours, and
//! best responses are applied cell by cell in ascending index order until a
//! full sweep leaves every entry unchanged.

use serde::{Deserialize, Serialize};

use crate::config::SystemParams;
use crate::geometry::CouplingGains;
use crate::power::affine_coefficients;
use crate::search::bisect_sign_change;
use crate::traffic::StateDistribution;
use crate::{Error, Result};

/// Antenna counts per user state of one cell; entry `n` is `M(n)`, `M(0) = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AntennaPolicy(pub Vec<u32>);

impl AntennaPolicy {
    /// Every busy state at `m_max`.
    pub fn full(k_max: u32, m_max: u32) -> Self {
        let mut v = vec![m_max; k_max as usize + 1];
        v[0] = 0;
        AntennaPolicy(v)
    }

    pub fn k_max(&self) -> usize {
        self.0.len() - 1
    }

    pub fn antennas(&self, users: usize) -> u32 {
        self.0[users]
    }

    /// `sum_n M(n) pi(n)`; the empty state contributes nothing.
    pub fn weighted_mean(&self, pi: &StateDistribution) -> f64 {
        self.0.iter().zip(&pi.pi).skip(1).map(|(m, p)| f64::from(*m) * p).sum()
    }

    /// Number of differing entries (zero norm of the difference).
    pub fn changed_entries(&self, other: &AntennaPolicy) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub fn is_feasible(&self, m_max: u32) -> bool {
        self.0[0] == 0 && self.0.iter().enumerate().skip(1).all(|(n, m)| *m as usize > n && *m <= m_max)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BestResponseMethod {
    /// Exhaustive integer sweep up to 512 antennas, stationary point beyond.
    #[default]
    Auto,
    /// Continuous stationary point, then integer neighbours and endpoints.
    Stationary,
    Exhaustive,
}

const EXHAUSTIVE_LIMIT: u32 = 512;

/// Everything a best response needs besides the opponents' play.
#[derive(Debug, Clone, Copy)]
pub struct GameContext<'a> {
    pub gains: &'a CouplingGains,
    pub params: &'a SystemParams,
    pub max_antennas: u32,
    pub max_sweeps: usize,
    pub method: BestResponseMethod,
}

/// Per-state utility for fixed interference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateObjective {
    pub users: u32,
    /// Single-antenna SINR.
    pub gamma: f64,
    /// `B (1 - alpha K_max / T_c)`.
    pub prelog: f64,
    pub c0: f64,
    pub c1: f64,
    /// `P_COD + P_DEC`, only used by [`StateObjective::full_value`].
    pub coding: f64,
}

impl StateObjective {
    pub fn new(users: u32, interference: f64, own_gain: f64, params: &SystemParams) -> Result<Self> {
        if users == 0 {
            return Err(Error::NoUsers);
        }
        let denom = params.noise_power * own_gain + interference;
        let gamma = params.tx_power / f64::from(users) / denom;
        let (c0, c1) = affine_coefficients(users, params)?;
        Ok(StateObjective { users, gamma, prelog: params.prelog(), c0, c1, coding: params.p_cod + params.p_dec })
    }

    /// Per-user rate with `m` antennas, bit/s.
    pub fn rate(&self, m: f64) -> f64 {
        let n = f64::from(self.users);
        self.prelog * (self.gamma * m * (m - n)).ln_1p() / std::f64::consts::LN_2
    }

    /// Utility without the rate-proportional power term.
    pub fn value(&self, m: f64) -> f64 {
        f64::from(self.users) * self.rate(m) / (self.c0 + self.c1 * m)
    }

    /// Utility of the full power model.
    pub fn full_value(&self, m: f64) -> f64 {
        let n = f64::from(self.users);
        let r = self.rate(m);
        n * r / (self.c0 + self.c1 * m + self.coding * n * r)
    }

    /// Sign-carrying derivative numerator of `value`: `N'D - N D'` up to positive factors.
    fn slope(&self, m: f64) -> f64 {
        let n = f64::from(self.users);
        let u = self.gamma * m * (m - n);
        let num = u.ln_1p();
        let dnum = self.gamma * (2.0 * m - n) / (1.0 + u);
        dnum * (self.c0 + self.c1 * m) - num * self.c1
    }

    fn range(&self, m_max: u32) -> Result<(u32, u32)> {
        let lo = self.users + 1;
        if lo > m_max {
            return Err(Error::EmptyStrategy { users: self.users, max_antennas: m_max });
        }
        Ok((lo, m_max))
    }

    /// Integer argmax of `score` over candidates, ties to the smaller count.
    fn pick(candidates: impl IntoIterator<Item = u32>, score: impl Fn(f64) -> f64) -> u32 {
        let mut best = (u32::MAX, f64::NEG_INFINITY);
        for m in candidates {
            let v = score(f64::from(m));
            if v > best.1 || (v == best.1 && m < best.0) {
                best = (m, v);
            }
        }
        best.0
    }

    pub fn argmax_exhaustive(&self, m_max: u32) -> Result<u32> {
        let (lo, hi) = self.range(m_max)?;
        Ok(Self::pick(lo..=hi, |m| self.value(m)))
    }

    pub fn argmax_full_exhaustive(&self, m_max: u32) -> Result<u32> {
        let (lo, hi) = self.range(m_max)?;
        Ok(Self::pick(lo..=hi, |m| self.full_value(m)))
    }

    /// Continuous stationary point on `[n+1, m_max]`.
    pub fn stationary_point(&self, m_max: u32) -> Result<f64> {
        let (lo, hi) = self.range(m_max)?;
        let (lo, hi) = (f64::from(lo), f64::from(hi));
        Ok(if self.slope(hi) > 0.0 {
            hi
        } else if self.slope(lo) <= 0.0 {
            lo
        } else {
            bisect_sign_change(|m| self.slope(m), lo, hi, 1e-9)
        })
    }

    pub fn argmax_stationary(&self, m_max: u32) -> Result<u32> {
        let (lo, hi) = self.range(m_max)?;
        let x = self.stationary_point(m_max)?;
        let mut cands = [lo, (x.floor() as u32).clamp(lo, hi), (x.ceil() as u32).clamp(lo, hi), hi];
        cands.sort_unstable();
        Ok(Self::pick(cands, |m| self.value(m)))
    }

    pub fn argmax(&self, m_max: u32, method: BestResponseMethod) -> Result<u32> {
        match method {
            BestResponseMethod::Exhaustive => self.argmax_exhaustive(m_max),
            BestResponseMethod::Stationary => self.argmax_stationary(m_max),
            BestResponseMethod::Auto if m_max <= EXHAUSTIVE_LIMIT => self.argmax_exhaustive(m_max),
            BestResponseMethod::Auto => self.argmax_stationary(m_max),
        }
    }

    /// True if the integer utility over `[n+1, m_max]` rises then falls with no valley.
    pub fn is_unimodal(&self, m_max: u32) -> Result<bool> {
        let (lo, hi) = self.range(m_max)?;
        let vals: Vec<f64> = (lo..=hi).map(|m| self.value(f64::from(m))).collect();
        let scale = vals.iter().copied().fold(0.0, f64::max);
        let eps = 1e-13 * scale;
        let mut descending = false;
        for w in vals.windows(2) {
            let d = w[1] - w[0];
            if d < -eps {
                descending = true;
            } else if d > eps && descending {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Interference seen by cell `c`: `sum_{d != c} G_cd p Mbar_d`.
pub fn effective_interference(
    c: usize,
    policies: &[AntennaPolicy],
    pis: &[StateDistribution],
    gains: &CouplingGains,
    p: f64,
) -> f64 {
    policies
        .iter()
        .zip(pis)
        .enumerate()
        .filter(|(d, _)| *d != c)
        .map(|(d, (pol, pi))| gains.g_cross[c][d] * p * pol.weighted_mean(pi))
        .sum()
}

/// Best antenna count for `users` users under interference `interference`.
pub fn best_response_state(
    users: u32,
    interference: f64,
    own_gain: f64,
    params: &SystemParams,
    max_antennas: u32,
    method: BestResponseMethod,
) -> Result<u32> {
    StateObjective::new(users, interference, own_gain, params)?.argmax(max_antennas, method)
}

/// Best response of one cell, solved independently per user state.
pub fn best_response_cell(
    c: usize,
    policies: &[AntennaPolicy],
    pis: &[StateDistribution],
    ctx: &GameContext<'_>,
) -> Result<AntennaPolicy> {
    let interference = effective_interference(c, policies, pis, ctx.gains, ctx.params.tx_power);
    best_response_under(interference, ctx.gains.g_own[c], ctx)
}

/// Best-response vector for a given interference level.
pub fn best_response_under(interference: f64, own_gain: f64, ctx: &GameContext<'_>) -> Result<AntennaPolicy> {
    let k_max = ctx.params.k_max;
    let mut out = Vec::with_capacity(k_max as usize + 1);
    out.push(0);
    for n in 1..=k_max {
        out.push(best_response_state(n, interference, own_gain, ctx.params, ctx.max_antennas, ctx.method)?);
    }
    Ok(AntennaPolicy(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Largest number of changed entries over all cells in this sweep.
    pub maxtol: usize,
    pub policies: Vec<AntennaPolicy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub initial: Vec<AntennaPolicy>,
    pub policies: Vec<AntennaPolicy>,
    pub pis: Vec<StateDistribution>,
    pub trace: Vec<SweepRecord>,
}

impl GameState {
    pub fn sweeps(&self) -> usize {
        self.trace.len()
    }

    pub fn maxtol_series(&self) -> Vec<usize> {
        self.trace.iter().map(|r| r.maxtol).collect()
    }

    /// Interference at the current policies for every cell.
    pub fn interference(&self, gains: &CouplingGains, p: f64) -> Vec<f64> {
        (0..self.policies.len()).map(|c| effective_interference(c, &self.policies, &self.pis, gains, p)).collect()
    }

    /// True if every entry moves in one direction only across the trace
    /// (non-increasing when `decreasing`, non-decreasing otherwise).
    pub fn is_monotone(&self, decreasing: bool) -> bool {
        let mut prev = &self.initial;
        for rec in &self.trace {
            for (a, b) in prev.iter().zip(&rec.policies) {
                let ok = a.0.iter().zip(&b.0).all(|(x, y)| if decreasing { y <= x } else { y >= x });
                if !ok {
                    return false;
                }
            }
            prev = &rec.policies;
        }
        true
    }
}

/// Gauss-Seidel best-response iteration from `initial` until a sweep changes nothing.
pub fn run_game(initial: Vec<AntennaPolicy>, pis: Vec<StateDistribution>, ctx: &GameContext<'_>) -> Result<GameState> {
    let n_cells = ctx.gains.num_cells();
    if initial.len() != n_cells || pis.len() != n_cells {
        return Err(Error::InvalidParameter("one policy and one distribution per cell required".into()));
    }
    if let Some(bad) =
        initial.iter().position(|p| p.k_max() != ctx.params.k_max as usize || !p.is_feasible(ctx.max_antennas))
    {
        return Err(Error::InvalidParameter(format!("initial policy of cell {bad} is infeasible")));
    }
    let mut policies = initial.clone();
    let mut trace = Vec::new();
    loop {
        let mut maxtol = 0;
        for c in 0..n_cells {
            let next = best_response_cell(c, &policies, &pis, ctx)?;
            maxtol = maxtol.max(next.changed_entries(&policies[c]));
            policies[c] = next;
        }
        trace.push(SweepRecord { maxtol, policies: policies.clone() });
        if maxtol == 0 {
            break;
        }
        if trace.len() >= ctx.max_sweeps {
            return Err(Error::NoConvergence(ctx.max_sweeps));
        }
    }
    Ok(GameState { initial, policies, pis, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub holds: bool,
    /// Largest relative utility gain any unilateral deviation achieves.
    pub worst_gain: f64,
}

/// Exhaustively checks that no cell can improve any state's utility by
/// more than `1e-12` relative through a unilateral change.
pub fn nash_certificate(state: &GameState, ctx: &GameContext<'_>) -> Result<NashReport> {
    let interference = state.interference(ctx.gains, ctx.params.tx_power);
    let mut worst_gain = 0.0f64;
    for (c, pol) in state.policies.iter().enumerate() {
        for n in 1..=ctx.params.k_max {
            let obj = StateObjective::new(n, interference[c], ctx.gains.g_own[c], ctx.params)?;
            let current = obj.value(f64::from(pol.antennas(n as usize)));
            let best = obj.value(f64::from(obj.argmax_exhaustive(ctx.max_antennas)?));
            worst_gain = worst_gain.max((best - current) / current);
        }
    }
    Ok(NashReport { holds: worst_gain <= 1e-12, worst_gain })
}

/// The maximiser is the same with and without the rate-proportional power term.
pub fn ratio_argmax_matches(obj: &StateObjective, m_max: u32) -> Result<bool> {
    Ok(obj.argmax_exhaustive(m_max)? == obj.argmax_full_exhaustive(m_max)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncreasingDifferences {
    pub holds: bool,
    /// Minimum of `F(x',y') - F(x,y') - F(x',y) + F(x,y)` over `x <= x'`, `y <= y'`.
    pub worst_margin: f64,
}

/// Grid check of increasing differences of `F(x, y) = ln R(x, I(y)) - ln P(x)`
/// for `users` users, own antennas `x` and interferer antennas `y`.
pub fn increasing_differences_check(
    users: u32,
    xs: &[u32],
    ys: &[f64],
    interference: impl Fn(f64) -> f64,
    own_gain: f64,
    params: &SystemParams,
) -> Result<IncreasingDifferences> {
    if let Some(&x) = xs.iter().find(|&&x| x <= users) {
        return Err(Error::TooFewAntennas { antennas: f64::from(x), users });
    }
    let mut xs = xs.to_vec();
    xs.sort_unstable();
    let mut ys = ys.to_vec();
    ys.sort_by(f64::total_cmp);

    let objectives: Vec<StateObjective> =
        ys.iter().map(|&y| StateObjective::new(users, interference(y), own_gain, params)).collect::<Result<_>>()?;
    // f[j][i] = F(x_i, y_j)
    let f: Vec<Vec<f64>> = objectives
        .iter()
        .map(|o| xs.iter().map(|&x| o.rate(f64::from(x)).ln() - (o.c0 + o.c1 * f64::from(x)).ln()).collect())
        .collect();

    let mut worst = f64::INFINITY;
    for j in 0..ys.len() {
        for l in j..ys.len() {
            for i in 0..xs.len() {
                for k in i..xs.len() {
                    let margin = (f[l][k] - f[l][i]) - (f[j][k] - f[j][i]);
                    worst = worst.min(margin);
                }
            }
        }
    }
    if worst == f64::INFINITY {
        worst = 0.0;
    }
    Ok(IncreasingDifferences { holds: worst >= -1e-9, worst_margin: worst })
}
