//! Browser front end for the simulator.
//!
//! Exposes three operations to JavaScript: the reference user-count
//! distribution at a given load, the per-state energy-efficiency curve over
//! the antenna count with its best response, and the PA input-power laws.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use mimo_ee::dimensioning::{
    calibrate_reference_lambda, peak_ee, reference_activity_fixed_point, ActivityOptions, Interference,
    ReferenceDesign, SymmetricCell,
};
use mimo_ee::experiment::network_gains;
use mimo_ee::game::{BestResponseMethod, StateObjective};
use mimo_ee::{PaKind, SimConfig, SystemParams};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// A reference network at a fixed design point.
#[wasm_bindgen]
pub struct Demo {
    cfg: SimConfig,
    design: ReferenceDesign,
    params: SystemParams,
    cell: SymmetricCell,
    lambda_max: f64,
}

#[wasm_bindgen]
impl Demo {
    /// `pa` is `"tpa"` or `"etpa"`.
    #[wasm_bindgen(constructor)]
    pub fn new(pa: &str, radius_m: f64, k_max: u32, m_max: u32, p_w: f64) -> Result<Demo, String> {
        let pa_kind: PaKind = pa.parse().map_err(err)?;
        let cfg = SimConfig { cell_radius_m: radius_m, ..SimConfig::default() };
        let cell = SymmetricCell::from_gains(&network_gains(&cfg).map_err(err)?);
        let params = cfg.system_params(pa_kind, k_max, p_w);
        let ee =
            peak_ee(k_max, m_max, p_w, cell.own_gain, Interference::Symmetric { cross_sum: cell.cross_sum }, &params)
                .map_err(err)?;
        let design = ReferenceDesign { k_max, m_max, p_opt: p_w, peak_ee: ee, pa_kind, cell_radius: radius_m };
        design.validate().map_err(err)?;
        let lambda_max =
            calibrate_reference_lambda(&design, cell, &params, cfg.per_user_bits, cfg.target_blocking).map_err(err)?;
        Ok(Demo { cfg, design, params, cell, lambda_max })
    }

    /// Peak-load energy efficiency of the design, bit/J.
    #[wasm_bindgen(getter)]
    pub fn peak_ee(&self) -> f64 {
        self.design.peak_ee
    }

    #[wasm_bindgen(getter)]
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `pi(0..=K_max)` of the reference system at `load` times the peak arrival rate.
    pub fn user_distribution(&self, load: f64) -> Result<Vec<f64>, String> {
        let sol = reference_activity_fixed_point(
            &self.design,
            self.cell,
            &self.params,
            self.cfg.per_user_bits,
            self.lambda_max,
            load,
            &ActivityOptions::default(),
        )
        .map_err(err)?;
        Ok(sol.pi.pi)
    }

    /// Energy efficiency (bit/J) with `users` users for `M = 0..=M_max`,
    /// NaN where `M <= users`. Interference is `scale` times the full-load level.
    pub fn ee_curve(&self, users: u32, scale: f64) -> Result<Vec<f64>, String> {
        let obj = self.objective(users, scale)?;
        Ok((0..=self.design.m_max).map(|m| if m > users { obj.full_value(f64::from(m)) } else { f64::NAN }).collect())
    }

    /// Best-response antenna count for the same state.
    pub fn best_response(&self, users: u32, scale: f64) -> Result<u32, String> {
        self.objective(users, scale)?.argmax(self.design.m_max, BestResponseMethod::Auto).map_err(err)
    }

    fn objective(&self, users: u32, scale: f64) -> Result<StateObjective, String> {
        if users == 0 || users > self.design.k_max {
            return Err(format!("users must be in 1..={}", self.design.k_max));
        }
        let interference = scale * self.params.tx_power * f64::from(self.design.m_max) * self.cell.cross_sum;
        StateObjective::new(users, interference, self.cell.own_gain, &self.params).map_err(err)
    }
}

/// PA input power for both amplifier types at fixed maximum output `p_max_w`.
/// Returns `points` triples `(p, tpa, etpa)` flattened, with `p` spanning the admissible range.
#[wasm_bindgen]
pub fn pa_input_curves(p_max_w: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(p_max_w > 0.0) || points < 2 {
        return Err("need p_max_w > 0 and at least two points".into());
    }
    let cfg = SimConfig { pa_max_output_w: Some(p_max_w), ..SimConfig::default() };
    let tpa = cfg.pa_model(PaKind::Tpa);
    let etpa = cfg.pa_model(PaKind::EtPa);
    let limit = tpa.backoff_limit(0.0);
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let p = limit * i as f64 / (points - 1) as f64;
        out.extend([p, tpa.input_power(p).map_err(err)?, etpa.input_power(p).map_err(err)?]);
    }
    Ok(out)
}
