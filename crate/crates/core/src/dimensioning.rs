//! Reference-system dimensioning and its off-peak operating point.
//!
//! The reference system serves up to `K_max` users with a fixed array of
//! `M_max` antennas at per-antenna power `p`. The triple maximises peak-load
//! energy efficiency when every cell in the network is identical and busy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PaKind, SimConfig, SystemParams};
use crate::geometry::CouplingGains;
use crate::power::{baseband_power, PaMaxOutput};
use crate::search::{golden_max, log_grid};
use crate::traffic::{calibrate_lambda_max, steady_state, QueueModel, StateDistribution};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDesign {
    pub k_max: u32,
    pub m_max: u32,
    pub p_opt: f64,
    /// bit/J.
    pub peak_ee: f64,
    pub pa_kind: PaKind,
    pub cell_radius: f64,
}

impl ReferenceDesign {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 || self.m_max <= self.k_max {
            return Err(Error::TooFewAntennas { antennas: f64::from(self.m_max), users: self.k_max });
        }
        if !(self.p_opt > 0.0) || !(self.peak_ee > 0.0) {
            return Err(Error::InvalidParameter("design power and EE must be positive".into()));
        }
        Ok(())
    }

    /// Runtime parameters for this design.
    pub fn params(&self, cfg: &SimConfig) -> SystemParams {
        cfg.system_params(self.pa_kind, self.k_max, self.p_opt)
    }
}

/// Network seen by a representative cell in a symmetric deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricCell {
    pub own_gain: f64,
    /// `sum_{d != c} G_cd`.
    pub cross_sum: f64,
}

impl SymmetricCell {
    /// Averages over cells; exact when the layout is symmetric.
    pub fn from_gains(gains: &CouplingGains) -> Self {
        let c = gains.num_cells() as f64;
        SymmetricCell {
            own_gain: gains.g_own.iter().sum::<f64>() / c,
            cross_sum: (0..gains.num_cells()).map(|i| gains.cross_sum(i)).sum::<f64>() / c,
        }
    }
}

/// Interference model while optimising `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interference {
    /// Independent of the power under optimisation, W.
    Fixed(f64),
    /// Every other cell mirrors this one: `I = p M sum G`.
    Symmetric { cross_sum: f64 },
}

impl Interference {
    fn at(&self, p: f64, m: f64) -> f64 {
        match *self {
            Interference::Fixed(i) => i,
            Interference::Symmetric { cross_sum } => p * m * cross_sum,
        }
    }
}

/// Bounds and resolution of the per-antenna power search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSearch {
    pub p_min: f64,
    pub p_max: f64,
    pub grid_points: usize,
}

impl PowerSearch {
    pub fn from_config(cfg: &SimConfig) -> Self {
        PowerSearch { p_min: cfg.p_search_min_w, p_max: cfg.p_search_max_w, grid_points: cfg.p_grid_points }
    }
}

/// Full-model EE of `k` users on `m` antennas at power `p` (cached per-`k` terms).
#[derive(Debug, Clone, Copy)]
struct EeKernel<'a> {
    users: f64,
    prelog: f64,
    c0: f64,
    c1_baseband: f64,
    coding: f64,
    noise: f64,
    params: &'a SystemParams,
}

impl<'a> EeKernel<'a> {
    fn new(k: u32, own_gain: f64, params: &'a SystemParams) -> Result<Self> {
        let p = params.with_k_max(k);
        p.validate()?;
        let bb = baseband_power(k, 0.0, params);
        Ok(EeKernel {
            users: f64::from(k),
            prelog: p.prelog(),
            c0: bb.c0 + params.p_oth,
            c1_baseband: bb.c1,
            coding: params.p_cod + params.p_dec,
            noise: params.noise_power * own_gain,
            params,
        })
    }

    fn ee(&self, m: f64, p: f64, interference: Interference) -> f64 {
        let Ok(pa) = self.params.pa.input_power(p) else {
            return f64::NEG_INFINITY;
        };
        let n = self.users;
        let sinr = p * (m / n) * (m - n) / (self.noise + interference.at(p, m));
        let r = self.prelog * sinr.ln_1p() / std::f64::consts::LN_2;
        n * r / (self.c0 + (self.c1_baseband + pa) * m + self.coding * n * r)
    }
}

/// Peak-load EE of the full power model, bit/J.
pub fn peak_ee(
    k: u32,
    m: u32,
    p: f64,
    own_gain: f64,
    interference: Interference,
    params: &SystemParams,
) -> Result<f64> {
    if m <= k {
        return Err(Error::TooFewAntennas { antennas: f64::from(m), users: k });
    }
    let v = EeKernel::new(k, own_gain, params)?.ee(f64::from(m), p, interference);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::BackoffExceeded { p, limit: params.pa.backoff_limit(p) })
    }
}

fn power_range(search: &PowerSearch, params: &SystemParams) -> Result<(f64, f64)> {
    let hi = match params.pa.max_output {
        PaMaxOutput::TiedToOperatingPower => search.p_max,
        PaMaxOutput::Fixed(_) => search.p_max.min(params.pa.backoff_limit(0.0)),
    };
    if !(search.p_min > 0.0) || hi <= search.p_min || search.grid_points < 2 {
        return Err(Error::InvalidParameter(format!("empty power range [{}, {hi}]", search.p_min)));
    }
    Ok((search.p_min, hi))
}

fn optimize_kernel(
    kernel: &EeKernel<'_>,
    m: u32,
    interference: Interference,
    search: &PowerSearch,
) -> Result<(f64, f64)> {
    let (lo, hi) = power_range(search, kernel.params)?;
    let m = f64::from(m);
    let f = |p: f64| kernel.ee(m, p, interference);
    Ok(match kernel.params.pa.kind {
        PaKind::EtPa => golden_max(f, lo, hi, 1e-6),
        PaKind::Tpa => {
            let grid = log_grid(lo, hi, search.grid_points);
            let (i, best) = grid.iter().map(|&p| f(p)).enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                if v > acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(grid.len() - 1)];
            let refined = golden_max(f, a, b, 1e-9 * grid[i]);
            if refined.1 >= best {
                refined
            } else {
                (grid[i], best)
            }
        }
    })
}

/// Per-antenna power maximising EE for `k` users on `m` antennas. Returns `(p, EE)`.
pub fn optimize_p(
    m: u32,
    k: u32,
    interference: Interference,
    own_gain: f64,
    params: &SystemParams,
    search: &PowerSearch,
) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::NoUsers);
    }
    if m <= k {
        return Err(Error::TooFewAntennas { antennas: f64::from(m), users: k });
    }
    optimize_kernel(&EeKernel::new(k, own_gain, params)?, m, interference, search)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionOptions {
    pub k_cap: u32,
    pub m_cap: u32,
    pub search: PowerSearch,
    /// Pins `p` instead of optimising it.
    pub fixed_p: Option<f64>,
}

impl DimensionOptions {
    pub fn from_config(cfg: &SimConfig) -> Self {
        DimensionOptions {
            k_cap: cfg.max_users_search,
            m_cap: cfg.max_antennas_search,
            search: PowerSearch::from_config(cfg),
            fixed_p: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    k: u32,
    m: u32,
    p: f64,
    ee: f64,
}

fn best_for_k(
    k: u32,
    cell: SymmetricCell,
    params: &SystemParams,
    opts: &DimensionOptions,
) -> Result<Option<Candidate>> {
    let kernel = match EeKernel::new(k, cell.own_gain, params) {
        Ok(kernel) => kernel,
        Err(Error::PilotOverhead { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let interference = Interference::Symmetric { cross_sum: cell.cross_sum };
    let mut best: Option<Candidate> = None;
    for m in k + 1..=opts.m_cap {
        let (p, ee) = match opts.fixed_p {
            Some(p) => (p, kernel.ee(f64::from(m), p, interference)),
            None => optimize_kernel(&kernel, m, interference, &opts.search)?,
        };
        if best.is_none_or(|b| ee > b.ee) {
            best = Some(Candidate { k, m, p, ee });
        }
    }
    Ok(best)
}

/// Exhaustive `(K, M)` search with `p` optimised (or pinned) per grid point.
pub fn dimension_reference(
    pa_kind: PaKind,
    cell_radius: f64,
    gains: &CouplingGains,
    params: &SystemParams,
    opts: &DimensionOptions,
) -> Result<ReferenceDesign> {
    if params.pa.kind != pa_kind {
        return Err(Error::InvalidParameter("PA model does not match requested kind".into()));
    }
    let cell = SymmetricCell::from_gains(gains);
    let per_k: Vec<Option<Candidate>> = (1..=opts.k_cap.min(opts.m_cap.saturating_sub(1)))
        .into_par_iter()
        .map(|k| best_for_k(k, cell, params, opts))
        .collect::<Result<_>>()?;
    // Ties resolve to the smallest K.
    let best = per_k
        .into_iter()
        .flatten()
        .fold(None::<Candidate>, |acc, c| if acc.is_none_or(|a| c.ee > a.ee) { Some(c) } else { acc })
        .ok_or_else(|| Error::InvalidParameter("no feasible (K, M) pair".into()))?;
    if !best.ee.is_finite() || best.ee <= 0.0 {
        return Err(Error::NonFinite("peak EE"));
    }
    Ok(ReferenceDesign { k_max: best.k, m_max: best.m, p_opt: best.p, peak_ee: best.ee, pa_kind, cell_radius })
}

/// `(K, M)` and its EE, if feasible.
pub type Neighbour = ((u32, u32), Option<f64>);

/// EE of every 8-neighbour of the design with `p` re-optimised; `None` marks an infeasible neighbour.
pub fn neighbourhood_ee(
    design: &ReferenceDesign,
    gains: &CouplingGains,
    params: &SystemParams,
    opts: &DimensionOptions,
) -> Result<Vec<Neighbour>> {
    let cell = SymmetricCell::from_gains(gains);
    let mut out = Vec::new();
    for dk in [-1i64, 0, 1] {
        for dm in [-1i64, 0, 1] {
            if dk == 0 && dm == 0 {
                continue;
            }
            let k = design.k_max as i64 + dk;
            let m = design.m_max as i64 + dm;
            let key = (k.max(0) as u32, m.max(0) as u32);
            if k < 1 || m <= k || k as u32 > opts.k_cap || m as u32 > opts.m_cap {
                out.push((key, None));
                continue;
            }
            let interference = Interference::Symmetric { cross_sum: cell.cross_sum };
            let ee = match opts.fixed_p {
                Some(p) => peak_ee(key.0, key.1, p, cell.own_gain, interference, params)?,
                None => optimize_p(key.1, key.0, interference, cell.own_gain, params, &opts.search)?.1,
            };
            out.push((key, Some(ee)));
        }
    }
    Ok(out)
}

/// Reference-system rates `R(1..=K_max)` with `M_max` antennas under interference `I`.
pub fn reference_rates(design: &ReferenceDesign, own_gain: f64, interference: f64, params: &SystemParams) -> Vec<f64> {
    let m = f64::from(design.m_max);
    let denom = params.noise_power * own_gain + interference;
    (1..=design.k_max)
        .map(|n| {
            let n = f64::from(n);
            params.prelog() * (params.tx_power * (m / n) * (m - n) / denom).ln_1p() / std::f64::consts::LN_2
        })
        .collect()
}

/// Peak arrival rate giving the target blocking for the fully loaded reference system.
pub fn calibrate_reference_lambda(
    design: &ReferenceDesign,
    cell: SymmetricCell,
    params: &SystemParams,
    per_user_bits: f64,
    target_blocking: f64,
) -> Result<f64> {
    let interference = params.tx_power * f64::from(design.m_max) * cell.cross_sum;
    let rates = reference_rates(design, cell.own_gain, interference, params);
    calibrate_lambda_max(&QueueModel::new(per_user_bits, rates, 0.0), target_blocking)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Damping {
    /// Plain iteration, switching to 0.5 once the update changes direction.
    Adaptive,
    /// `a <- (1 - w) a + w a'` throughout.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityOptions {
    pub start: f64,
    pub damping: Damping,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ActivityOptions {
    fn default() -> Self {
        ActivityOptions { start: 1.0, damping: Damping::Adaptive, tolerance: 1e-8, max_iterations: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivitySolution {
    pub activity: f64,
    /// `sum_n pi(n) n R(n) / P(n)`, bit/J.
    pub reference_ee: f64,
    /// User-weighted mean rate, bit/s.
    pub reference_rate: f64,
    pub interference: f64,
    pub rates: Vec<f64>,
    pub pi: StateDistribution,
    pub iterations: usize,
}

/// The map `a -> 1 - pi(0)` for the reference system at arrival rate `lambda`.
pub fn activity_map(
    a: f64,
    design: &ReferenceDesign,
    cell: SymmetricCell,
    params: &SystemParams,
    per_user_bits: f64,
    lambda: f64,
) -> Result<(f64, f64, Vec<f64>, StateDistribution)> {
    let interference = a * params.tx_power * f64::from(design.m_max) * cell.cross_sum;
    let rates = reference_rates(design, cell.own_gain, interference, params);
    let pi = steady_state(&QueueModel::new(per_user_bits, rates.clone(), lambda))?;
    Ok((pi.activity(), interference, rates, pi))
}

/// Off-peak reference operating point: activity, EE and rate at `load_fraction * lambda_max`.
/// Peak load (fraction 1) is taken at activity exactly 1.
#[allow(clippy::too_many_arguments)]
pub fn reference_activity_fixed_point(
    design: &ReferenceDesign,
    cell: SymmetricCell,
    params: &SystemParams,
    per_user_bits: f64,
    lambda_max: f64,
    load_fraction: f64,
    opts: &ActivityOptions,
) -> Result<ActivitySolution> {
    if !(load_fraction > 0.0 && load_fraction <= 1.0) || !(0.0..=1.0).contains(&opts.start) {
        return Err(Error::InvalidParameter(format!(
            "load fraction {load_fraction} or start {} out of range",
            opts.start
        )));
    }
    let lambda = load_fraction * lambda_max;
    let finish = |activity: f64, iterations: usize| -> Result<ActivitySolution> {
        let (_, interference, rates, pi) = activity_map(activity, design, cell, params, per_user_bits, lambda)?;
        let (ee, rate) = reference_metrics(design, &rates, &pi, params)?;
        Ok(ActivitySolution { activity, reference_ee: ee, reference_rate: rate, interference, rates, pi, iterations })
    };
    if load_fraction >= 1.0 {
        return finish(1.0, 0);
    }

    let mut a = opts.start;
    let mut weight = match opts.damping {
        Damping::Adaptive => 1.0,
        Damping::Fixed(w) => w,
    };
    let mut last_step = 0.0f64;
    for it in 1..=opts.max_iterations {
        let (next, ..) = activity_map(a, design, cell, params, per_user_bits, lambda)?;
        let step = next - a;
        if step.abs() <= opts.tolerance {
            return finish(next, it);
        }
        if matches!(opts.damping, Damping::Adaptive) && step * last_step < 0.0 {
            weight = 0.5;
        }
        last_step = step;
        a += weight * step;
    }
    Err(Error::ActivityNoConvergence(opts.max_iterations))
}

/// `(EE, user-weighted rate)` of the reference system under distribution `pi`.
fn reference_metrics(
    design: &ReferenceDesign,
    rates: &[f64],
    pi: &StateDistribution,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    let m = f64::from(design.m_max);
    let mut ee = 0.0;
    let mut carried = 0.0;
    let mut users = 0.0;
    for (i, r) in rates.iter().enumerate() {
        let n = (i + 1) as u32;
        let p = crate::power::total_power(m, n, *r, params, true)?.total;
        let w = pi.pi[i + 1];
        ee += w * f64::from(n) * r / p;
        carried += w * f64::from(n) * r;
        users += w * f64::from(n);
    }
    Ok((ee, if users > 0.0 { carried / users } else { 0.0 }))
}
