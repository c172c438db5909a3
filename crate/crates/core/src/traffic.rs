//! Daily load profiles and the state-dependent `M/G/m/m` loss queue that
//! turns an arrival rate into a distribution over the number of users a
//! base station serves simultaneously.
//!
//! With per-user rates `R(n)` at occupancy `n` and per-user volume `s`, the
//! stationary distribution is
//!
//! ```text
//! pi(n) = pi(0) * prod_{i=1..n} lambda * s / (i * R(i))
//! ```
//!
//! evaluated in the log domain. By PASTA the blocking probability equals
//! `pi(m)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadInterval {
    pub index: usize,
    /// Load relative to the daily peak, in (0, 1].
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub label: String,
    pub intervals: Vec<LoadInterval>,
}

pub const PROFILE_HEADER: [&str; 2] = ["interval", "load_fraction"];

/// Illustrative 120-interval (12 minute) residential-like profile.
pub const RESIDENTIAL_120: &str = include_str!("../data/residential_120.csv");
/// Illustrative 24-interval (hourly) Europe-like profile.
pub const EUROPE_24: &str = include_str!("../data/europe_24.csv");

impl LoadProfile {
    /// Parses `interval,load_fraction` CSV. The header row is mandatory,
    /// fractions must lie in (0, 1] and the peak must be exactly 1.
    pub fn parse_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != PROFILE_HEADER {
            return Err(Error::Profile {
                line: 1,
                msg: format!(
                    "expected header `interval,load_fraction`, got `{}`",
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut intervals = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = |i: usize| rec.get(i).ok_or_else(|| Error::Profile { line, msg: "missing field".into() });
            let index: usize =
                field(0)?.parse().map_err(|e| Error::Profile { line, msg: format!("bad interval index: {e}") })?;
            let fraction: f64 =
                field(1)?.parse().map_err(|e| Error::Profile { line, msg: format!("bad load fraction: {e}") })?;
            if !(fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::Profile { line, msg: format!("load fraction {fraction} outside (0, 1]") });
            }
            intervals.push(LoadInterval { index, fraction });
        }
        if intervals.is_empty() {
            return Err(Error::Profile { line: 1, msg: "profile has no intervals".into() });
        }
        let peak = intervals.iter().map(|i| i.fraction).fold(0.0, f64::max);
        if (peak - 1.0).abs() > 1e-9 {
            return Err(Error::Profile { line: 1, msg: format!("peak load fraction is {peak}, expected 1") });
        }
        Ok(LoadProfile { label: label.into(), intervals })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let label = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        Self::parse_csv(&text, label)
    }

    pub fn residential_120() -> Self {
        Self::parse_csv(RESIDENTIAL_120, "residential_120").expect("bundled profile is valid")
    }

    pub fn europe_24() -> Self {
        Self::parse_csv(EUROPE_24, "europe_24").expect("bundled profile is valid")
    }

    /// Flat profile at peak load.
    pub fn constant_peak(len: usize) -> Self {
        LoadProfile {
            label: "constant_peak".into(),
            intervals: (1..=len).map(|index| LoadInterval { index, fraction: 1.0 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Fraction at position `h`, floored at `floor`.
    pub fn effective_fraction(&self, h: usize, floor: f64) -> f64 {
        self.intervals[h].fraction.max(floor)
    }
}

/// Loss queue with occupancy-dependent per-user service rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    /// Number of servers `m` (the user cap).
    pub servers: u32,
    /// Per-user traffic volume `s`, bits.
    pub per_user_bits: f64,
    /// `R(1..=m)`, bit/s per user.
    pub rates: Vec<f64>,
    /// Arrivals per second.
    pub arrival_rate: f64,
}

impl QueueModel {
    pub fn new(per_user_bits: f64, rates: Vec<f64>, arrival_rate: f64) -> Self {
        QueueModel { servers: rates.len() as u32, per_user_bits, rates, arrival_rate }
    }

    pub fn with_arrival_rate(&self, arrival_rate: f64) -> Self {
        QueueModel { arrival_rate, ..self.clone() }
    }

    /// `f(n) = R(n) / R(1)`.
    pub fn scaling(&self, n: usize) -> f64 {
        self.rates[n - 1] / self.rates[0]
    }

    fn validate(&self) -> Result<()> {
        if self.rates.len() != self.servers as usize || self.servers == 0 {
            return Err(Error::InvalidParameter("queue needs one rate per server".into()));
        }
        if self.rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::NonFinite("queue service rates"));
        }
        if !(self.arrival_rate >= 0.0) || !(self.per_user_bits > 0.0) {
            return Err(Error::InvalidParameter("arrival rate and per-user volume must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    /// `pi(0..=m)`.
    pub pi: Vec<f64>,
}

impl StateDistribution {
    /// All mass on the empty state.
    pub fn idle(servers: usize) -> Self {
        let mut pi = vec![0.0; servers + 1];
        pi[0] = 1.0;
        StateDistribution { pi }
    }

    /// All mass on `n` users.
    pub fn point(servers: usize, n: usize) -> Self {
        let mut pi = vec![0.0; servers + 1];
        pi[n] = 1.0;
        StateDistribution { pi }
    }

    pub fn servers(&self) -> usize {
        self.pi.len() - 1
    }

    pub fn blocking(&self) -> f64 {
        self.pi[self.servers()]
    }

    pub fn activity(&self) -> f64 {
        1.0 - self.pi[0]
    }

    pub fn mean_users(&self) -> f64 {
        self.pi.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

pub fn steady_state(q: &QueueModel) -> Result<StateDistribution> {
    q.validate()?;
    let m = q.servers as usize;
    if q.arrival_rate == 0.0 {
        return Ok(StateDistribution::idle(m));
    }
    let log_load = (q.arrival_rate * q.per_user_bits).ln();
    let mut log_w = Vec::with_capacity(m + 1);
    log_w.push(0.0);
    let mut acc = 0.0;
    for (i, r) in q.rates.iter().enumerate() {
        acc += log_load - ((i + 1) as f64).ln() - r.ln();
        log_w.push(acc);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NonFinite("queue state weights"));
    }
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(StateDistribution { pi: w.iter().map(|v| v / total).collect() })
}

/// Smallest arrival rate giving `pi(m) = target`, by doubling then bisection.
pub fn calibrate_lambda_max(template: &QueueModel, target_blocking: f64) -> Result<f64> {
    if !(target_blocking > 0.0 && target_blocking < 1.0) {
        return Err(Error::InvalidParameter(format!("target blocking {target_blocking} not in (0, 1)")));
    }
    template.validate()?;
    let blocking = |lambda: f64| steady_state(&template.with_arrival_rate(lambda)).map(|d| d.blocking());

    // Start from the single-server scale lambda = R(1) / s.
    let mut hi = template.rates[0] / template.per_user_bits;
    let mut lo = 0.0;
    let mut doublings = 0;
    while blocking(hi)? < target_blocking {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        assert!(doublings < 2000, "blocking never reaches the target for finite servers");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let b = blocking(mid)?;
        if (b - target_blocking).abs() <= 1e-12 * target_blocking {
            return Ok(mid);
        }
        if b < target_blocking {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Distribution for interval `h`: `lambda = max(fraction, floor) * lambda_max`.
pub fn interval_distribution(
    profile: &LoadProfile,
    h: usize,
    lambda_max: f64,
    template: &QueueModel,
    floor: f64,
) -> Result<StateDistribution> {
    steady_state(&template.with_arrival_rate(profile.effective_fraction(h, floor) * lambda_max))
}
