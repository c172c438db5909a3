//! Hexagonal 19-cell layout with toroidal wrap-around and the coupling gains
//! `G_cc = E[1/g_cck]`, `G_cd = E[g_dck / g_cck]` averaged over a
//! deterministic test-point grid.
//!
//! Conventions:
//!
//! * flat-top hexagons, `cell_radius` is the circumradius, inter-site
//!   distance is `sqrt(3) * cell_radius`;
//! * cell 0 is the centre cell, cells 1..=6 the first ring and 7..=18 the
//!   second ring, each ring walked counter-clockwise;
//! * wrap-around uses the six translations of the 19-cell cluster by the
//!   axial vector (5, -3) and its 60 degree rotations;
//! * test points come from a Kronecker (plastic-number) sequence on one
//!   60 degree triangle of the hexagon, replicated under the six rotations.
//!   The point set is therefore rotation symmetric whenever the grid size is
//!   a multiple of six.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point = [f64; 2];

pub const SUPPORTED_CELLS: usize = 19;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Axial hex directions, counter-clockwise starting east.
const AXIAL_DIRS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

/// Cluster translation generating the 19-cell torus.
const WRAP_GENERATOR: (i32, i32) = (5, -3);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub cell_centers: Vec<Point>,
    pub cell_radius: f64,
    pub min_distance: f64,
    /// Translations of the cluster; the identity is not included.
    pub wrap_offsets: Vec<Point>,
    pub test_points: Vec<Vec<Point>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingGains {
    /// `G_cc` per cell.
    pub g_own: Vec<f64>,
    /// `G_cd` with row `c` the victim cell; diagonal is zero and unused.
    pub g_cross: Vec<Vec<f64>>,
}

impl CouplingGains {
    pub fn num_cells(&self) -> usize {
        self.g_own.len()
    }

    /// `sum_{d != c} G_cd`.
    pub fn cross_sum(&self, cell: usize) -> f64 {
        self.g_cross[cell].iter().enumerate().filter(|(d, _)| *d != cell).map(|(_, g)| g).sum()
    }
}

fn axial_to_xy(q: i32, r: i32, radius: f64) -> Point {
    let (q, r) = (f64::from(q), f64::from(r));
    [1.5 * radius * q, SQRT3 * radius * (r + q / 2.0)]
}

fn rotate_axial((q, r): (i32, i32)) -> (i32, i32) {
    (-r, q + r)
}

fn ring_axial(radius: i32) -> Vec<(i32, i32)> {
    if radius == 0 {
        return vec![(0, 0)];
    }
    let (dq, dr) = AXIAL_DIRS[4];
    let mut cur = (dq * radius, dr * radius);
    let mut out = Vec::with_capacity(6 * radius as usize);
    for dir in AXIAL_DIRS {
        for _ in 0..radius {
            out.push(cur);
            cur = (cur.0 + dir.0, cur.1 + dir.1);
        }
    }
    out
}

/// Closed flat-top hexagon of circumradius `radius` centred at the origin.
pub fn in_hexagon(p: Point, radius: f64) -> bool {
    let (x, y) = (p[0].abs(), p[1].abs());
    let tol = 1e-9 * radius;
    y <= SQRT3 / 2.0 * radius + tol && SQRT3 * x + y <= SQRT3 * radius + tol
}

fn rotate(p: Point, k: usize) -> Point {
    let theta = std::f64::consts::FRAC_PI_3 * k as f64;
    let (s, c) = theta.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

/// Relative test-point offsets shared by every cell.
fn test_offsets(radius: f64, d_min: f64, count: usize) -> Vec<Point> {
    // Plastic number; (1/g, 1/g^2) gives a well spread 2-D Kronecker sequence.
    const PLASTIC: f64 = 1.324_717_957_244_746;
    let (a1, a2) = (1.0 / PLASTIC, 1.0 / (PLASTIC * PLASTIC));
    let v0 = [radius, 0.0];
    let v1 = [radius / 2.0, SQRT3 / 2.0 * radius];

    let orbits = count / 6;
    let singles = count % 6;
    let mut wedge = Vec::with_capacity(orbits + singles);
    let mut i: u64 = 0;
    while wedge.len() < orbits + singles {
        i += 1;
        let mut u = (0.5 + a1 * i as f64).fract();
        let mut v = (0.5 + a2 * i as f64).fract();
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let p = [u * v0[0] + v * v1[0], u * v0[1] + v * v1[1]];
        if p[0].hypot(p[1]) >= d_min {
            wedge.push(p);
        }
    }

    let mut out = Vec::with_capacity(count);
    for p in &wedge[..orbits] {
        for k in 0..6 {
            out.push(rotate(*p, k));
        }
    }
    out.extend_from_slice(&wedge[orbits..]);
    out
}

/// Builds the 19-cell wrap-around layout.
pub fn build_layout(num_cells: usize, d_max: f64, d_min: f64, grid_size: usize) -> Result<NetworkLayout> {
    if num_cells != SUPPORTED_CELLS {
        return Err(Error::UnsupportedCellCount(num_cells));
    }
    if !(d_min >= 0.0 && d_min < d_max) || !d_max.is_finite() {
        return Err(Error::InvalidRadius { d_min, d_max });
    }
    if grid_size == 0 {
        return Err(Error::EmptyGrid);
    }

    let cell_centers: Vec<Point> = (0..=2).flat_map(ring_axial).map(|(q, r)| axial_to_xy(q, r, d_max)).collect();

    let mut wrap_offsets = Vec::with_capacity(6);
    let mut gen = WRAP_GENERATOR;
    for _ in 0..6 {
        wrap_offsets.push(axial_to_xy(gen.0, gen.1, d_max));
        gen = rotate_axial(gen);
    }

    let offsets = test_offsets(d_max, d_min, grid_size);
    let test_points =
        cell_centers.iter().map(|c| offsets.iter().map(|o| [c[0] + o[0], c[1] + o[1]]).collect()).collect();

    Ok(NetworkLayout { cell_centers, cell_radius: d_max, min_distance: d_min, wrap_offsets, test_points })
}

impl NetworkLayout {
    /// Distance from `p` to the nearest wrapped copy of base station `bs`.
    pub fn wrap_distance(&self, p: Point, bs: usize) -> f64 {
        let c = self.cell_centers[bs];
        let direct = (p[0] - c[0]).hypot(p[1] - c[1]);
        self.wrap_offsets.iter().map(|o| (p[0] - c[0] - o[0]).hypot(p[1] - c[1] - o[1])).fold(direct, f64::min)
    }

    pub fn num_cells(&self) -> usize {
        self.cell_centers.len()
    }
}

/// Channel gain at distance `d` meters under the power-law path loss.
pub fn path_gain(d: f64, coeff: f64, exponent: f64) -> f64 {
    coeff / d.powf(exponent)
}

/// Averages the own-cell and cross-cell gain statistics over the test points.
pub fn compute_coupling(layout: &NetworkLayout, pathloss_coeff: f64, pathloss_exp: f64) -> Result<CouplingGains> {
    if !(pathloss_coeff > 0.0) || !(pathloss_exp > 2.0) || !pathloss_coeff.is_finite() {
        return Err(Error::InvalidPathLoss { coeff: pathloss_coeff, exponent: pathloss_exp });
    }
    let n_cells = layout.num_cells();
    let rows: Vec<Result<(f64, Vec<f64>)>> = (0..n_cells)
        .into_par_iter()
        .map(|c| {
            let pts = &layout.test_points[c];
            let center = layout.cell_centers[c];
            let mut inv_own = 0.0;
            let mut cross = vec![0.0; n_cells];
            for (k, p) in pts.iter().enumerate() {
                let d_own = (p[0] - center[0]).hypot(p[1] - center[1]);
                if d_own <= 0.0 {
                    return Err(Error::ZeroDistance { cell: c, point: k, bs: c });
                }
                inv_own += 1.0 / path_gain(d_own, pathloss_coeff, pathloss_exp);
                for (d, acc) in cross.iter_mut().enumerate() {
                    if d == c {
                        continue;
                    }
                    let d_int = layout.wrap_distance(*p, d);
                    if d_int <= 0.0 {
                        return Err(Error::ZeroDistance { cell: c, point: k, bs: d });
                    }
                    *acc += (d_own / d_int).powf(pathloss_exp);
                }
            }
            let n = pts.len() as f64;
            cross.iter_mut().for_each(|v| *v /= n);
            Ok((inv_own / n, cross))
        })
        .collect();

    let mut g_own = Vec::with_capacity(n_cells);
    let mut g_cross = Vec::with_capacity(n_cells);
    for row in rows {
        let (own, cross) = row?;
        g_own.push(own);
        g_cross.push(cross);
    }
    Ok(CouplingGains { g_own, g_cross })
}

/// JSON view of a layout and its coupling gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryExport {
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub grid_size: usize,
    pub cell_centers: Vec<Point>,
    pub wrap_offsets: Vec<Point>,
    pub g_own: Vec<f64>,
    pub g_cross: Vec<Vec<f64>>,
}

impl GeometryExport {
    pub fn new(layout: &NetworkLayout, gains: &CouplingGains) -> Self {
        GeometryExport {
            cell_radius_m: layout.cell_radius,
            min_distance_m: layout.min_distance,
            grid_size: layout.test_points.first().map_or(0, Vec::len),
            cell_centers: layout.cell_centers.clone(),
            wrap_offsets: layout.wrap_offsets.clone(),
            g_own: gains.g_own.clone(),
            g_cross: gains.g_cross.clone(),
        }
    }
}
