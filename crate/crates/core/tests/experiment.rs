use std::fs;

use mimo_ee::dimensioning::ReferenceDesign;
use mimo_ee::experiment::network_gains;
use mimo_ee::experiment::{
    aggregate, emit, read_report, run_daily, run_daily_with_gains, sweep, write_sweep_table, RunConfig, Scenario,
    SweepDimension,
};
use mimo_ee::power::IdleAccounting;
use mimo_ee::traffic::LoadProfile;
use mimo_ee::{Error, PaKind, SimConfig};

fn design() -> ReferenceDesign {
    ReferenceDesign { k_max: 62, m_max: 195, p_opt: 0.0774, peak_ee: 7.76e6, pa_kind: PaKind::Tpa, cell_radius: 500.0 }
}

fn short_run() -> RunConfig {
    let mut cfg = RunConfig::new(SimConfig::default(), PaKind::Tpa, LoadProfile::europe_24());
    cfg.design = Some(design());
    cfg
}

#[test]
fn emit_round_trip_and_byte_identical_reruns() {
    let cfg = short_run();
    let a = run_daily(&cfg).unwrap();
    let b = run_daily(&cfg).unwrap();
    let da = tempfile::tempdir().unwrap();
    let db = tempfile::tempdir().unwrap();
    emit(&a, da.path()).unwrap();
    emit(&b, db.path()).unwrap();
    for file in ["intervals.csv", "summary.json", "policy.json"] {
        let x = fs::read(da.path().join(file)).unwrap();
        let y = fs::read(db.path().join(file)).unwrap();
        assert!(x == y, "{file} differs between runs");
    }
    assert_eq!(read_report(da.path()).unwrap(), a);
}

#[test]
fn interval_invariants() {
    let report = run_daily(&short_run()).unwrap();
    assert_eq!(report.rows.len(), 24);
    assert_eq!(report.policies.len(), 24);
    for r in &report.rows {
        let (a, b) = (r.adaptive.unwrap(), r.reference.unwrap());
        assert!(a.ee >= b.ee * (1.0 - 1e-12), "interval {}: adaptive EE below reference", r.interval);
        assert!(a.power > 0.0 && b.power > 0.0);
        assert!(r.effective_load >= 0.1);
    }
    assert_eq!(aggregate(&report.rows), report.summary.aggregates);
    for p in &report.policies {
        assert_eq!(p.rounds, 1);
        assert_eq!(*p.maxtol.last().unwrap(), 0);
        assert!(p.monotone && p.nash_worst_gain <= 1e-12);
    }
}

#[test]
fn traffic_scale_is_absorbed_by_calibration() {
    let a = run_daily(&short_run()).unwrap();
    let mut cfg = short_run();
    cfg.sim.per_user_bits = 3.7e6;
    let b = run_daily(&cfg).unwrap();
    let (x, y) = (a.summary.aggregates, b.summary.aggregates);
    for (u, v) in [
        (x.ee_gain_pct, y.ee_gain_pct),
        (x.energy_saving_pct, y.energy_saving_pct),
        (x.rate_change_pct, y.rate_change_pct),
    ] {
        let (u, v) = (u.unwrap(), v.unwrap());
        assert!((u - v).abs() <= 1e-6 * u.abs().max(1.0), "{u} vs {v}");
    }
}

#[test]
fn constant_peak_load_gives_negligible_gain() {
    let mut cfg = short_run();
    cfg.profile = LoadProfile::constant_peak(4);
    let report = run_daily(&cfg).unwrap();
    let gain = report.summary.aggregates.ee_gain_pct.unwrap();
    assert!(gain.abs() < 2.0, "peak gain {gain}%");
}

#[test]
fn active_idle_accounting_adds_site_power() {
    let base = run_daily(&short_run()).unwrap();
    let mut cfg = short_run();
    cfg.accounting = IdleAccounting::ActiveIdle;
    let idle = run_daily(&cfg).unwrap();
    for (x, y) in base.rows.iter().zip(&idle.rows) {
        let (xa, ya) = (x.adaptive.unwrap(), y.adaptive.unwrap());
        assert_eq!(xa.ee, ya.ee);
        assert!(ya.power >= xa.power);
        let expect = xa.power + (1.0 - xa.activity) * 20.0;
        assert!((ya.power - expect).abs() <= 1e-9 * expect);
    }
}

#[test]
fn joint_fixed_point_terminates() {
    let mut cfg = short_run();
    cfg.profile = LoadProfile::parse_csv("interval,load_fraction\n1,0.2\n2,0.6\n3,1.0\n", "three").unwrap();
    cfg.joint_fixed_point = true;
    let report = run_daily(&cfg).unwrap();
    for p in &report.policies {
        assert!((1..=10).contains(&p.rounds));
        assert!(p.nash_worst_gain <= 1e-12);
    }
}

#[test]
fn single_scenario_runs_leave_gaps() {
    let mut cfg = short_run();
    cfg.scenario = Scenario::Reference;
    let r = run_daily(&cfg).unwrap();
    assert!(r.rows.iter().all(|row| row.adaptive.is_none() && row.reference.is_some()));
    assert!(r.policies.is_empty());
    assert_eq!(r.summary.aggregates.ee_gain_pct, None);
    let dir = tempfile::tempdir().unwrap();
    emit(&r, dir.path()).unwrap();
    assert_eq!(read_report(dir.path()).unwrap(), r);
}

#[test]
fn empty_report_emits_header_only_csv() {
    let mut r = run_daily(&short_run()).unwrap();
    r.rows.clear();
    r.policies.clear();
    r.summary.aggregates = aggregate(&r.rows);
    let dir = tempfile::tempdir().unwrap();
    emit(&r, dir.path()).unwrap();
    let csv = fs::read_to_string(dir.path().join("intervals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["aggregates"]["ee_gain_pct"].is_null());
    assert_eq!(read_report(dir.path()).unwrap(), r);
}

#[test]
fn mismatched_cached_design_is_rejected() {
    let mut cfg = short_run();
    cfg.pa_kind = PaKind::EtPa;
    assert!(matches!(run_daily(&cfg), Err(Error::InvalidParameter(_))));
}

#[test]
fn single_value_sweep_equals_daily_run() {
    let mut cfg = short_run();
    cfg.profile = LoadProfile::parse_csv("interval,load_fraction\n1,0.3\n2,1.0\n", "two").unwrap();
    cfg.design = None;
    let swept = sweep(&cfg, SweepDimension::PDesign, &[0.1]).unwrap();
    let mut pinned = cfg.clone();
    pinned.fixed_p = Some(0.1);
    let gains = network_gains(&pinned.sim).unwrap();
    let direct = run_daily_with_gains(&pinned, &gains).unwrap();
    assert_eq!(swept.len(), 1);
    assert_eq!(swept[0], direct);
    assert_eq!(direct.summary.design.p_opt, 0.1);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_sweep_table(SweepDimension::PDesign, &[0.1], &swept, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("p_design_w,k_max,m_max"));
    assert_eq!(text.lines().count(), 2);
    assert!(sweep(&cfg, SweepDimension::Radius, &[-1.0]).is_err());
}
