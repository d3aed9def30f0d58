//! Dissolution level per integration point.
//!
//! The implicit update
//!
//! ```text
//! (d − d_n) V_uc = V_eff Δt [ I1 + (1 − d)(I2 + I3) ]
//! ```
//!
//! is linear in `d` and solved in closed form. Values above one are capped;
//! the discarded part is booked as cut-off volume.

use nalgebra::Vector3;

use crate::error::{EcmError, Result};
use crate::geometry::{Region, UnitCellGeom};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IpState {
    pub d: f64,
    pub active: bool,
    pub e_prev: Vector3<f64>,
    /// Charge that crossed the unit cell in the vertical direction, A s.
    pub charge: f64,
}

impl IpState {
    pub fn new(region: Region) -> Self {
        let d = match region {
            Region::Metal => 0.0,
            Region::Electrolyte => 1.0,
        };
        Self { d, active: false, e_prev: Vector3::zeros(), charge: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CutoffLedger {
    pub v_co: f64,
    pub v_dis_fe: f64,
}

impl CutoffLedger {
    pub fn record(&mut self, dissolved: f64, cutoff: f64) {
        self.v_dis_fe += dissolved;
        self.v_co += cutoff;
    }
}

/// Unit-cell currents sorted in descending order.
pub fn currents_from_density(j: &Vector3<f64>, uc: &UnitCellGeom) -> [f64; 3] {
    let mut i = [(uc.a_uc[0] * j[0]).abs(), (uc.a_uc[1] * j[1]).abs(), (uc.a_uc[2] * j[2]).abs()];
    i.sort_by(|a, b| b.total_cmp(a));
    i
}

/// Result of one level update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelUpdate {
    pub d: f64,
    /// Uncapped solution of the implicit relation.
    pub raw: f64,
    pub cutoff: f64,
}

pub fn update_level(
    d_n: f64,
    currents: [f64; 3],
    v_eff: f64,
    v_uc: f64,
    dt: f64,
    active: bool,
) -> Result<LevelUpdate> {
    let [i1, i2, i3] = currents;
    if currents.iter().any(|&i| !(i >= 0.0)) || !(v_eff >= 0.0) || !(v_uc > 0.0) || !(dt >= 0.0) {
        return Err(EcmError::Invariant(format!(
            "level update needs non-negative inputs: I={currents:?}, V_eff={v_eff}, V_uc={v_uc}, dt={dt}"
        )));
    }
    if !(0.0..=1.0).contains(&d_n) {
        return Err(EcmError::Invariant(format!("dissolution level {d_n} outside [0, 1]")));
    }
    if !active {
        return Ok(LevelUpdate { d: d_n, raw: d_n, cutoff: 0.0 });
    }
    let c = v_eff / v_uc * dt;
    let raw = (d_n + c * (i1 + i2 + i3)) / (1.0 + c * (i2 + i3));
    if raw > 1.0 {
        Ok(LevelUpdate { d: 1.0, raw, cutoff: (raw - 1.0) * v_uc })
    } else {
        Ok(LevelUpdate { d: raw, raw, cutoff: 0.0 })
    }
}

/// Current that drives the update, evaluated at the uncapped level.
pub fn effective_current(raw: f64, currents: [f64; 3]) -> f64 {
    currents[0] + (1.0 - raw) * (currents[1] + currents[2])
}

/// Elements that carry metal and share a face with electrolyte.
pub fn activation_update(neighbors: &[Vec<usize>], regions: &[Region], mean_d: &[f64], threshold: f64) -> Vec<bool> {
    let liquid = |e: usize| regions[e] == Region::Electrolyte || mean_d[e] >= threshold;
    (0..regions.len())
        .map(|e| regions[e] == Region::Metal && mean_d[e] < 1.0 && neighbors[e].iter().any(|&n| liquid(n)))
        .collect()
}
