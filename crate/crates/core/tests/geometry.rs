use mimo_ee::geometry::{build_layout, compute_coupling, in_hexagon, CouplingGains, GeometryExport, NetworkLayout};
use mimo_ee::SimConfig;

fn network(radius: f64, grid: usize) -> (NetworkLayout, CouplingGains) {
    let cfg = SimConfig::default();
    let layout = build_layout(19, radius, cfg.min_distance_m, grid).unwrap();
    let gains = compute_coupling(&layout, cfg.pathloss_coeff, cfg.pathloss_exponent).unwrap();
    (layout, gains)
}

/// Minimum-image distance between two sites in units of the inter-site distance.
fn site_class(layout: &NetworkLayout, c: usize, d: usize) -> i64 {
    let isd = 3f64.sqrt() * layout.cell_radius;
    (layout.wrap_distance(layout.cell_centers[c], d) / isd * 1e6).round() as i64
}

#[test]
fn full_grid_row_sums_match() {
    let (_, g) = network(500.0, 15000);
    let sums: Vec<f64> = (0..19).map(|c| g.cross_sum(c)).collect();
    for s in &sums {
        assert!((s - sums[0]).abs() / sums[0] <= 1e-9, "{s} vs {}", sums[0]);
    }
    for c in 0..19 {
        assert!((g.g_own[c] - g.g_own[0]).abs() / g.g_own[0] <= 1e-9);
    }
}

#[test]
fn gains_positive_and_interferers_weaker() {
    let (_, g) = network(500.0, 15000);
    for c in 0..19 {
        assert!(g.g_own[c].is_finite() && g.g_own[c] > 0.0);
        for d in (0..19).filter(|&d| d != c) {
            assert!(g.g_cross[c][d] > 0.0 && g.g_cross[c][d] < 1.0, "G[{c}][{d}] = {}", g.g_cross[c][d]);
        }
    }
}

#[test]
fn same_class_pairs_share_gain() {
    let (layout, g) = network(500.0, 15000);
    let mut classes: std::collections::BTreeMap<i64, Vec<f64>> = Default::default();
    for c in 0..19 {
        for d in (0..19).filter(|&d| d != c) {
            classes.entry(site_class(&layout, c, d)).or_default().push(g.g_cross[c][d]);
        }
    }
    assert_eq!(classes.len(), 3);
    for (class, v) in classes {
        assert_eq!(v.len(), 19 * 6);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(0.0, f64::max);
        assert!((hi - lo) / lo <= 1e-6, "class {class}: spread {}", (hi - lo) / lo);
    }
}

#[test]
fn coupling_is_bit_identical_across_runs() {
    let (la, a) = network(500.0, 3000);
    let (lb, b) = network(500.0, 3000);
    assert_eq!(la, lb);
    assert_eq!(a, b);
    let ea = serde_json::to_string(&GeometryExport::new(&la, &a)).unwrap();
    let eb = serde_json::to_string(&GeometryExport::new(&lb, &b)).unwrap();
    assert_eq!(ea, eb);
}

#[test]
fn own_gain_shrinks_with_radius() {
    let g: Vec<f64> = [1000.0, 500.0, 250.0].iter().map(|&r| network(r, 15000).1.g_own[0]).collect();
    assert!(g[0] > g[1] && g[1] > g[2], "{g:?}");
}

#[test]
fn every_point_inside_its_cell() {
    let (layout, _) = network(250.0, 15000);
    for (c, pts) in layout.test_points.iter().enumerate() {
        assert_eq!(pts.len(), 15000);
        let o = layout.cell_centers[c];
        for p in pts {
            let rel = [p[0] - o[0], p[1] - o[1]];
            assert!(in_hexagon(rel, 250.0));
            assert!(rel[0].hypot(rel[1]) >= 35.0);
        }
    }
}

#[test]
fn export_round_trips() {
    let (layout, gains) = network(500.0, 600);
    let e = GeometryExport::new(&layout, &gains);
    let back: GeometryExport = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
    assert_eq!(back, e);
}
