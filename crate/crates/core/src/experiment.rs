//! Daily runs: adaptive antennas versus the fixed reference system over a
//! load profile, parameter sweeps, and the on-disk result format.
//!
//! Output directory layout written by [`emit`]:
//!
//! * `intervals.csv`: one row per interval, columns in [`CSV_HEADER`] order.
//! * `summary.json`: daily aggregates, the reference design, the config
//!   echo and the artifact version.
//! * `policy.json`: converged antenna policies per interval.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PaKind, SimConfig, SystemParams};
use crate::dimensioning::{
    calibrate_reference_lambda, dimension_reference, reference_activity_fixed_point, ActivityOptions, DimensionOptions,
    ReferenceDesign, SymmetricCell,
};
use crate::game::{
    effective_interference, nash_certificate, run_game, AntennaPolicy, BestResponseMethod, GameContext, GameState,
};
use crate::geometry::{build_layout, compute_coupling, CouplingGains};
use crate::power::{idle_power, total_power, IdleAccounting};
use crate::traffic::{steady_state, LoadProfile, QueueModel, StateDistribution};
use crate::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Maximum queue/game rounds per interval with the joint fixed point enabled.
pub const JOINT_ROUNDS: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[default]
    Both,
    Adaptive,
    Reference,
}

impl Scenario {
    fn adaptive(self) -> bool {
        matches!(self, Scenario::Both | Scenario::Adaptive)
    }

    fn reference(self) -> bool {
        matches!(self, Scenario::Both | Scenario::Reference)
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Scenario::Both),
            "adaptive" => Ok(Scenario::Adaptive),
            "reference" => Ok(Scenario::Reference),
            other => Err(Error::InvalidParameter(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Physical constants; `cell_radius_m` selects the deployment.
    pub sim: SimConfig,
    pub pa_kind: PaKind,
    pub profile: LoadProfile,
    pub scenario: Scenario,
    pub accounting: IdleAccounting,
    /// Iterate queue and game per interval until the distributions settle.
    pub joint_fixed_point: bool,
    /// Pins the per-antenna power during dimensioning.
    pub fixed_p: Option<f64>,
    /// Cached design; skips dimensioning.
    pub design: Option<ReferenceDesign>,
}

impl RunConfig {
    pub fn new(sim: SimConfig, pa_kind: PaKind, profile: LoadProfile) -> Self {
        RunConfig {
            sim,
            pa_kind,
            profile,
            scenario: Scenario::Both,
            accounting: IdleAccounting::IdleOff,
            joint_fixed_point: false,
            fixed_p: None,
            design: None,
        }
    }
}

/// Network-average figures for one scenario in one interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    /// `sum_{n>=1} pi(n) n R(n) / P(n)`, bit/J.
    pub ee: f64,
    /// Mean consumed power per BS, W.
    pub power: f64,
    /// User-weighted mean rate, bit/s.
    pub mean_user_rate: f64,
    /// `sum_n pi(n) M(n)`.
    pub mean_antennas: f64,
    pub activity: f64,
    pub blocking: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub interval: usize,
    pub load_fraction: f64,
    /// Load fraction after the floor.
    pub effective_load: f64,
    pub adaptive: Option<IntervalMetrics>,
    pub reference: Option<IntervalMetrics>,
}

impl IntervalRow {
    /// Relative EE improvement of the adaptive scheme, percent.
    pub fn ee_gain_pct(&self) -> Option<f64> {
        Some((self.adaptive?.ee / self.reference?.ee - 1.0) * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPolicy {
    pub interval: usize,
    /// Queue/game rounds run (1 without the joint fixed point).
    pub rounds: usize,
    pub maxtol: Vec<usize>,
    pub monotone: bool,
    pub nash_worst_gain: f64,
    pub policies: Vec<AntennaPolicy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub ee_gain_pct: Option<f64>,
    pub energy_saving_pct: Option<f64>,
    pub rate_change_pct: Option<f64>,
    pub mean_activity_adaptive: Option<f64>,
    pub mean_activity_reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub profile: String,
    pub intervals: usize,
    pub pa_kind: PaKind,
    pub cell_radius_m: f64,
    pub scenario: Scenario,
    pub accounting: IdleAccounting,
    pub joint_fixed_point: bool,
    pub fixed_p: Option<f64>,
    /// Peak arrival rate, 1/s.
    pub lambda_max: f64,
    pub design: ReferenceDesign,
    pub aggregates: Aggregates,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyReport {
    pub summary: Summary,
    pub rows: Vec<IntervalRow>,
    pub policies: Vec<IntervalPolicy>,
}

/// Plain means over intervals (equal durations).
pub fn aggregate(rows: &[IntervalRow]) -> Aggregates {
    let mean = |f: &dyn Fn(&IntervalRow) -> Option<f64>| -> Option<f64> {
        let v: Option<Vec<f64>> = rows.iter().map(f).collect();
        let v = v?;
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let ee_a = mean(&|r| r.adaptive.map(|m| m.ee));
    let ee_r = mean(&|r| r.reference.map(|m| m.ee));
    let p_a = mean(&|r| r.adaptive.map(|m| m.power));
    let p_r = mean(&|r| r.reference.map(|m| m.power));
    let r_a = mean(&|r| r.adaptive.map(|m| m.mean_user_rate));
    let r_r = mean(&|r| r.reference.map(|m| m.mean_user_rate));
    let ratio = |a: Option<f64>, b: Option<f64>| Some((a? / b? - 1.0) * 100.0);
    Aggregates {
        ee_gain_pct: ratio(ee_a, ee_r),
        energy_saving_pct: ratio(p_a, p_r).map(|v| -v),
        rate_change_pct: ratio(r_a, r_r),
        mean_activity_adaptive: mean(&|r| r.adaptive.map(|m| m.activity)),
        mean_activity_reference: mean(&|r| r.reference.map(|m| m.activity)),
    }
}

/// Coupling gains of the configured deployment.
pub fn network_gains(sim: &SimConfig) -> Result<CouplingGains> {
    let layout = build_layout(sim.num_cells, sim.cell_radius_m, sim.min_distance_m, sim.grid_size)?;
    compute_coupling(&layout, sim.pathloss_coeff, sim.pathloss_exponent)
}

/// Dimensions the reference system for `cfg`, honouring a pinned `p`.
pub fn dimension(cfg: &RunConfig, gains: &CouplingGains) -> Result<ReferenceDesign> {
    let params = cfg.sim.system_params(cfg.pa_kind, 1, cfg.fixed_p.unwrap_or(0.1));
    let opts = DimensionOptions { fixed_p: cfg.fixed_p, ..DimensionOptions::from_config(&cfg.sim) };
    dimension_reference(cfg.pa_kind, cfg.sim.cell_radius_m, gains, &params, &opts)
}

/// Per-cell metrics for a policy, its rates `R(1..=K)` and distribution.
pub fn cell_metrics(
    policy: &AntennaPolicy,
    rates: &[f64],
    pi: &StateDistribution,
    params: &SystemParams,
    accounting: IdleAccounting,
) -> Result<IntervalMetrics> {
    let mut ee = 0.0;
    let mut power = pi.pi[0] * idle_power(params, accounting);
    let mut carried = 0.0;
    let mut users = 0.0;
    let mut antennas = 0.0;
    for (i, r) in rates.iter().enumerate() {
        let n = (i + 1) as u32;
        let m = f64::from(policy.antennas(i + 1));
        let w = pi.pi[i + 1];
        let p = total_power(m, n, *r, params, true)?.total;
        ee += w * f64::from(n) * r / p;
        power += w * p;
        carried += w * f64::from(n) * r;
        users += w * f64::from(n);
        antennas += w * m;
    }
    Ok(IntervalMetrics {
        ee,
        power,
        mean_user_rate: if users > 0.0 { carried / users } else { 0.0 },
        mean_antennas: antennas,
        activity: pi.activity(),
        blocking: pi.blocking(),
    })
}

fn mean_metrics(cells: &[IntervalMetrics]) -> IntervalMetrics {
    let c = cells.len() as f64;
    let avg = |f: fn(&IntervalMetrics) -> f64| cells.iter().map(f).sum::<f64>() / c;
    IntervalMetrics {
        ee: avg(|m| m.ee),
        power: avg(|m| m.power),
        mean_user_rate: avg(|m| m.mean_user_rate),
        mean_antennas: avg(|m| m.mean_antennas),
        activity: avg(|m| m.activity),
        blocking: avg(|m| m.blocking),
    }
}

/// Per-user rates `R_c(1..=K)` at the state's policies and interference.
pub fn game_rates(state: &GameState, ctx: &GameContext<'_>) -> Vec<Vec<f64>> {
    let p = ctx.params;
    state
        .policies
        .iter()
        .enumerate()
        .map(|(c, pol)| {
            let i = effective_interference(c, &state.policies, &state.pis, ctx.gains, p.tx_power);
            let denom = p.noise_power * ctx.gains.g_own[c] + i;
            (1..=p.k_max as usize)
                .map(|n| {
                    let m = f64::from(pol.antennas(n));
                    let n = n as f64;
                    p.prelog() * (p.tx_power * (m / n) * (m - n) / denom).ln_1p() / std::f64::consts::LN_2
                })
                .collect()
        })
        .collect()
}

struct Pipeline<'a> {
    cfg: &'a RunConfig,
    params: SystemParams,
    design: ReferenceDesign,
    cell: SymmetricCell,
    lambda_max: f64,
    ctx: GameContext<'a>,
    /// Adaptive rates at peak load, per cell.
    peak_rates: Vec<Vec<f64>>,
}

impl Pipeline<'_> {
    fn queue(&self, rates: &[f64], lambda: f64) -> Result<StateDistribution> {
        steady_state(&QueueModel::new(self.cfg.sim.per_user_bits, rates.to_vec(), lambda))
    }

    fn reference(&self, fraction: f64) -> Result<IntervalMetrics> {
        let sol = reference_activity_fixed_point(
            &self.design,
            self.cell,
            &self.params,
            self.cfg.sim.per_user_bits,
            self.lambda_max,
            fraction,
            &ActivityOptions::default(),
        )?;
        let full = AntennaPolicy::full(self.design.k_max, self.design.m_max);
        cell_metrics(&full, &sol.rates, &sol.pi, &self.params, self.cfg.accounting)
    }

    fn adaptive(&self, interval: usize, fraction: f64) -> Result<(IntervalMetrics, IntervalPolicy)> {
        let lambda = fraction * self.lambda_max;
        let start = vec![AntennaPolicy::full(self.design.k_max, self.design.m_max); self.ctx.gains.num_cells()];
        let mut pis = self.peak_rates.iter().map(|r| self.queue(r, lambda)).collect::<Result<Vec<_>>>()?;
        let mut state = run_game(start.clone(), pis.clone(), &self.ctx)?;
        let mut rates = game_rates(&state, &self.ctx);
        let mut rounds = 1;
        if self.cfg.joint_fixed_point {
            while rounds < JOINT_ROUNDS {
                let next = rates.iter().map(|r| self.queue(r, lambda)).collect::<Result<Vec<_>>>()?;
                let moved =
                    next.iter().zip(&pis).flat_map(|(a, b)| a.pi.iter().zip(&b.pi)).any(|(x, y)| (x - y).abs() > 1e-12);
                if !moved {
                    break;
                }
                pis = next;
                state = run_game(start.clone(), pis.clone(), &self.ctx)?;
                rates = game_rates(&state, &self.ctx);
                rounds += 1;
            }
        }
        let cells = state
            .policies
            .iter()
            .zip(&rates)
            .zip(&state.pis)
            .map(|((pol, r), pi)| cell_metrics(pol, r, pi, &self.params, self.cfg.accounting))
            .collect::<Result<Vec<_>>>()?;
        let nash = nash_certificate(&state, &self.ctx)?;
        let policy = IntervalPolicy {
            interval,
            rounds,
            maxtol: state.maxtol_series(),
            monotone: state.is_monotone(true),
            nash_worst_gain: nash.worst_gain,
            policies: state.policies,
        };
        Ok((mean_metrics(&cells), policy))
    }
}

/// Runs one day of the configured profile.
pub fn run_daily(cfg: &RunConfig) -> Result<DailyReport> {
    let gains = network_gains(&cfg.sim)?;
    run_daily_with_gains(cfg, &gains)
}

/// [`run_daily`] with precomputed coupling gains.
pub fn run_daily_with_gains(cfg: &RunConfig, gains: &CouplingGains) -> Result<DailyReport> {
    let design = match &cfg.design {
        Some(d) if d.pa_kind != cfg.pa_kind => {
            return Err(Error::InvalidParameter(format!(
                "cached design is for {}, run uses {}",
                d.pa_kind, cfg.pa_kind
            )));
        }
        Some(d) => d.clone(),
        None => dimension(cfg, gains)?,
    };
    design.validate()?;
    let params = design.params(&cfg.sim);
    params.validate()?;
    let cell = SymmetricCell::from_gains(gains);
    let lambda_max =
        calibrate_reference_lambda(&design, cell, &params, cfg.sim.per_user_bits, cfg.sim.target_blocking)?;
    let ctx = GameContext {
        gains,
        params: &params,
        max_antennas: design.m_max,
        max_sweeps: cfg.sim.max_sweeps,
        method: BestResponseMethod::Auto,
    };

    let mut pipeline =
        Pipeline { cfg, params: params.clone(), design: design.clone(), cell, lambda_max, ctx, peak_rates: Vec::new() };
    if cfg.scenario.adaptive() {
        let peak = reference_activity_fixed_point(
            &design,
            cell,
            &params,
            cfg.sim.per_user_bits,
            lambda_max,
            1.0,
            &ActivityOptions::default(),
        )?;
        let start = vec![AntennaPolicy::full(design.k_max, design.m_max); gains.num_cells()];
        let state = run_game(start, vec![peak.pi; gains.num_cells()], &pipeline.ctx)?;
        pipeline.peak_rates = game_rates(&state, &pipeline.ctx);
    }

    let floor = cfg.sim.min_load_fraction;
    let results: Vec<(IntervalRow, Option<IntervalPolicy>)> = (0..cfg.profile.len())
        .into_par_iter()
        .map(|h| {
            let wrap = |e: Error| Error::Interval { interval: h, source: Box::new(e) };
            let fraction = cfg.profile.effective_fraction(h, floor);
            let reference = cfg.scenario.reference().then(|| pipeline.reference(fraction)).transpose().map_err(wrap)?;
            let adaptive = cfg.scenario.adaptive().then(|| pipeline.adaptive(h, fraction)).transpose().map_err(wrap)?;
            let row = IntervalRow {
                interval: cfg.profile.intervals[h].index,
                load_fraction: cfg.profile.intervals[h].fraction,
                effective_load: fraction,
                adaptive: adaptive.as_ref().map(|a| a.0),
                reference,
            };
            Ok((row, adaptive.map(|a| a.1)))
        })
        .collect::<Result<_>>()?;
    let (rows, policies): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let policies: Vec<IntervalPolicy> = policies.into_iter().flatten().collect();

    let summary = Summary {
        version: ARTIFACT_VERSION.to_string(),
        profile: cfg.profile.label.clone(),
        intervals: rows.len(),
        pa_kind: cfg.pa_kind,
        cell_radius_m: cfg.sim.cell_radius_m,
        scenario: cfg.scenario,
        accounting: cfg.accounting,
        joint_fixed_point: cfg.joint_fixed_point,
        fixed_p: cfg.fixed_p,
        lambda_max,
        design,
        aggregates: aggregate(&rows),
        config: cfg.sim.clone(),
    };
    Ok(DailyReport { summary, rows, policies })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepDimension {
    Radius,
    PDesign,
}

impl FromStr for SweepDimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radius" => Ok(SweepDimension::Radius),
            "p-design" | "p_design" => Ok(SweepDimension::PDesign),
            other => Err(Error::InvalidParameter(format!("unknown sweep dimension `{other}`"))),
        }
    }
}

/// One daily run per value; radius values re-dimension, power values pin `p`.
pub fn sweep(cfg: &RunConfig, dimension: SweepDimension, values: &[f64]) -> Result<Vec<DailyReport>> {
    values
        .iter()
        .map(|&v| {
            if !(v > 0.0) {
                return Err(Error::InvalidParameter(format!("sweep value {v} must be positive")));
            }
            let mut run = cfg.clone();
            run.design = None;
            match dimension {
                SweepDimension::Radius => run.sim.cell_radius_m = v,
                SweepDimension::PDesign => run.fixed_p = Some(v),
            }
            run_daily(&run)
        })
        .collect()
}

/// Columns after the swept value (`radius_m` or `p_design_w`).
pub const SWEEP_HEADER: [&str; 7] =
    ["k_max", "m_max", "p_opt_w", "peak_ee_bit_per_j", "ee_gain_pct", "energy_saving_pct", "rate_change_pct"];

pub const CSV_HEADER: [&str; 15] = [
    "interval",
    "load_fraction",
    "effective_load",
    "adaptive_ee_bit_per_j",
    "reference_ee_bit_per_j",
    "adaptive_power_w",
    "reference_power_w",
    "adaptive_rate_bps",
    "reference_rate_bps",
    "adaptive_mean_antennas",
    "reference_mean_antennas",
    "adaptive_activity",
    "reference_activity",
    "adaptive_blocking",
    "reference_blocking",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_intervals_csv(rows: &[IntervalRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let a = r.adaptive;
        let b = r.reference;
        let pick = |m: Option<IntervalMetrics>, f: fn(&IntervalMetrics) -> f64| opt(m.as_ref().map(f));
        w.write_record([
            r.interval.to_string(),
            r.load_fraction.to_string(),
            r.effective_load.to_string(),
            pick(a, |m| m.ee),
            pick(b, |m| m.ee),
            pick(a, |m| m.power),
            pick(b, |m| m.power),
            pick(a, |m| m.mean_user_rate),
            pick(b, |m| m.mean_user_rate),
            pick(a, |m| m.mean_antennas),
            pick(b, |m| m.mean_antennas),
            pick(a, |m| m.activity),
            pick(b, |m| m.activity),
            pick(a, |m| m.blocking),
            pick(b, |m| m.blocking),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_intervals_csv(path: &Path) -> Result<Vec<IntervalRow>> {
    let mut rd = csv::Reader::from_path(path)?;
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidParameter(format!("{}: unexpected header", path.display())));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |msg: String| Error::Profile { line, msg };
        let num = |i: usize| -> Result<Option<f64>> {
            let s = &rec[i];
            if s.is_empty() {
                return Ok(None);
            }
            s.parse().map(Some).map_err(|_| bad(format!("column {} is not a number", CSV_HEADER[i])))
        };
        let metrics = |off: usize| -> Result<Option<IntervalMetrics>> {
            let vals: Vec<Option<f64>> = (0..6).map(|j| num(3 + off + 2 * j)).collect::<Result<_>>()?;
            let vals: Option<Vec<f64>> = vals.into_iter().collect();
            Ok(vals.map(|v| IntervalMetrics {
                ee: v[0],
                power: v[1],
                mean_user_rate: v[2],
                mean_antennas: v[3],
                activity: v[4],
                blocking: v[5],
            }))
        };
        rows.push(IntervalRow {
            interval: rec[0].parse().map_err(|_| bad("interval is not an integer".into()))?,
            load_fraction: num(1)?.ok_or_else(|| bad("missing load fraction".into()))?,
            effective_load: num(2)?.ok_or_else(|| bad("missing effective load".into()))?,
            adaptive: metrics(0)?,
            reference: metrics(1)?,
        });
    }
    Ok(rows)
}

/// Writes `intervals.csv`, `summary.json` and `policy.json` into `dir`.
pub fn emit(report: &DailyReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_intervals_csv(&report.rows, &dir.join("intervals.csv"))?;
    write_json(&dir.join("summary.json"), &report.summary)?;
    write_json(&dir.join("policy.json"), &report.policies)
}

/// Inverse of [`emit`].
pub fn read_report(dir: &Path) -> Result<DailyReport> {
    Ok(DailyReport {
        rows: read_intervals_csv(&dir.join("intervals.csv"))?,
        summary: read_json(&dir.join("summary.json"))?,
        policies: read_json(&dir.join("policy.json"))?,
    })
}

/// One line per sweep value.
pub fn write_sweep_table(
    dimension: SweepDimension,
    values: &[f64],
    reports: &[DailyReport],
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let first = match dimension {
        SweepDimension::Radius => "radius_m",
        SweepDimension::PDesign => "p_design_w",
    };
    w.write_record(std::iter::once(first).chain(SWEEP_HEADER))?;
    for (v, r) in values.iter().zip(reports) {
        let d = &r.summary.design;
        let a = &r.summary.aggregates;
        w.write_record([
            v.to_string(),
            d.k_max.to_string(),
            d.m_max.to_string(),
            d.p_opt.to_string(),
            d.peak_ee.to_string(),
            opt(a.ee_gain_pct),
            opt(a.energy_saving_pct),
            opt(a.rate_change_pct),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
