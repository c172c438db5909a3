use mimo_ee::dimensioning::{
    activity_map, calibrate_reference_lambda, dimension_reference, neighbourhood_ee, optimize_p, peak_ee,
    reference_activity_fixed_point, ActivityOptions, Damping, DimensionOptions, Interference, PowerSearch,
    ReferenceDesign, SymmetricCell,
};
use mimo_ee::experiment::network_gains;
use mimo_ee::search::log_grid;
use mimo_ee::{PaKind, SimConfig};

fn search() -> PowerSearch {
    PowerSearch::from_config(&SimConfig::default())
}

#[test]
fn optimizer_matches_brute_force_sweep() {
    let cfg = SimConfig::default();
    let own_gain = 1.2e13;
    for kind in [PaKind::Tpa, PaKind::EtPa] {
        let params = cfg.system_params(kind, 1, 0.1);
        let (p, _) = optimize_p(2, 1, Interference::Fixed(0.0), own_gain, &params, &search()).unwrap();
        let (bp, _) = log_grid(1e-3, 4.0, 100_000)
            .into_iter()
            .map(|q| (q, peak_ee(1, 2, q, own_gain, Interference::Fixed(0.0), &params).unwrap()))
            .fold((0.0, f64::NEG_INFINITY), |a, c| if c.1 > a.1 { c } else { a });
        assert!((p - bp).abs() / bp < 1e-3, "{kind}: {p} vs brute force {bp}");
    }
}

#[test]
fn etpa_objective_unimodal_in_power() {
    let cfg = SimConfig::default();
    let params = cfg.system_params(PaKind::EtPa, 1, 0.1);
    for (k, m) in [(1, 2), (2, 8), (4, 16), (10, 40), (55, 163)] {
        for i in [Interference::Fixed(0.0), Interference::Fixed(1.0), Interference::Symmetric { cross_sum: 0.47 }] {
            let v: Vec<f64> =
                log_grid(1e-3, 4.0, 4000).into_iter().map(|q| peak_ee(k, m, q, 1.2e13, i, &params).unwrap()).collect();
            let peak = v.iter().enumerate().fold(0, |b, (j, x)| if *x > v[b] { j } else { b });
            assert!(v[..=peak].windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-14)), "k={k} m={m} {i:?}");
            assert!(v[peak..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)), "k={k} m={m} {i:?}");
        }
    }
}

#[test]
fn design_stable_under_coarser_power_grid_and_locally_optimal() {
    let cfg = SimConfig::default();
    let gains = network_gains(&cfg).unwrap();
    let params = cfg.system_params(PaKind::Tpa, 1, 0.1);
    let opts = DimensionOptions::from_config(&cfg);
    let fine = dimension_reference(PaKind::Tpa, 500.0, &gains, &params, &opts).unwrap();
    let coarse_opts = DimensionOptions { search: PowerSearch { grid_points: 512, ..opts.search }, ..opts };
    let coarse = dimension_reference(PaKind::Tpa, 500.0, &gains, &params, &coarse_opts).unwrap();
    assert!(fine.k_max.abs_diff(coarse.k_max) <= 1 && fine.m_max.abs_diff(coarse.m_max) <= 1, "{fine:?} {coarse:?}");
    assert!((fine.peak_ee - coarse.peak_ee).abs() / fine.peak_ee < 1e-3);

    assert!(fine.k_max < fine.m_max && fine.peak_ee > 0.0);
    for ((k, m), ee) in neighbourhood_ee(&fine, &gains, &params, &opts).unwrap() {
        if let Some(ee) = ee {
            assert!(ee <= fine.peak_ee, "neighbour ({k}, {m}) beats the design");
        }
    }
}

#[test]
fn pinned_power_is_respected() {
    let cfg = SimConfig::default();
    let gains = network_gains(&cfg).unwrap();
    let params = cfg.system_params(PaKind::Tpa, 1, 0.2);
    let opts = DimensionOptions { fixed_p: Some(0.2), ..DimensionOptions::from_config(&cfg) };
    let d = dimension_reference(PaKind::Tpa, 500.0, &gains, &params, &opts).unwrap();
    assert_eq!(d.p_opt, 0.2);
}

struct Fixture {
    design: ReferenceDesign,
    cell: SymmetricCell,
    params: mimo_ee::SystemParams,
    lambda_max: f64,
}

fn fixture() -> Fixture {
    let cfg = SimConfig::default();
    let cell = SymmetricCell::from_gains(&network_gains(&cfg).unwrap());
    let design = ReferenceDesign {
        k_max: 62,
        m_max: 195,
        p_opt: 0.0774,
        peak_ee: 1.0,
        pa_kind: PaKind::Tpa,
        cell_radius: 500.0,
    };
    let params = design.params(&cfg);
    let lambda_max = calibrate_reference_lambda(&design, cell, &params, 1e8, 0.02).unwrap();
    Fixture { design, cell, params, lambda_max }
}

#[test]
fn activity_fixed_point_properties() {
    let f = fixture();
    let solve = |load: f64, opts: ActivityOptions| {
        reference_activity_fixed_point(&f.design, f.cell, &f.params, 1e8, f.lambda_max, load, &opts).unwrap()
    };
    let peak = solve(1.0, ActivityOptions::default());
    assert_eq!(peak.activity, 1.0);

    let mut last = 0.0;
    for load in [0.1, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let from_one = solve(load, ActivityOptions::default());
        let from_zero = solve(load, ActivityOptions { start: 0.0, ..Default::default() });
        assert!((from_one.activity - from_zero.activity).abs() <= 1e-6, "load {load}");
        let damped = solve(load, ActivityOptions { damping: Damping::Fixed(0.3), ..Default::default() });
        assert!((from_one.activity - damped.activity).abs() <= 1e-6, "load {load}");
        assert!(from_one.activity < 1.0 && from_one.activity > last);
        assert!(from_one.reference_ee > 0.0 && from_one.reference_rate > 0.0);
        last = from_one.activity;
    }
}

#[test]
fn activity_map_monotone_in_activity() {
    let f = fixture();
    for load in [0.1, 0.5, 0.9] {
        let vals: Vec<f64> = (0..=20)
            .map(|i| {
                activity_map(f64::from(i) / 20.0, &f.design, f.cell, &f.params, 1e8, load * f.lambda_max).unwrap().0
            })
            .collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]), "{vals:?}");
    }
}

#[test]
fn activity_rejects_bad_load() {
    let f = fixture();
    for load in [0.0, 1.5, f64::NAN] {
        assert!(reference_activity_fixed_point(
            &f.design,
            f.cell,
            &f.params,
            1e8,
            f.lambda_max,
            load,
            &ActivityOptions::default()
        )
        .is_err());
    }
}
