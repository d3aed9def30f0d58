//! Derived quantities: reference solutions, volumes, roughness and the
//! process signature series.

pub mod export;
pub mod surface;

use serde::{Deserialize, Serialize};

use crate::dissolution::{CutoffLedger, IpState};
use crate::error::{EcmError, Result};
use crate::fem::N_GP;
use crate::geometry::{Region, UnitCellGeom};

pub use export::{write_csv, write_vtk, VtkFields};
pub use surface::{active_profile, equivalent_surface, fit_line, SurfaceAxes};

/// Stationary gap width `k_E (Δv − Δv_pol) V_eff / ẋ_ca`.
pub fn analytic_gap_width(k_e: f64, dv: f64, dv_pol: f64, v_eff: f64, feed: f64) -> Result<f64> {
    if !(feed > 0.0) {
        return Err(EcmError::InvalidInput(format!("feed rate must be positive, got {feed}")));
    }
    Ok(k_e * (dv - dv_pol) * v_eff / feed)
}

/// Cathode potential emulating a tool that advances at `feed` across a gap `s`.
pub fn cathode_potential(t: f64, v_an: f64, feed: f64, s: f64) -> f64 {
    -(v_an * feed / s) * t
}

/// `Σ d V_uc` over the integration points of metal elements.
pub fn dissolved_volume(ip: &[[IpState; N_GP]], cells: &[UnitCellGeom], regions: &[Region]) -> f64 {
    ip.iter()
        .zip(cells)
        .zip(regions)
        .filter(|(_, r)| **r == Region::Metal)
        .map(|((s, uc), _)| s.iter().map(|p| p.d).sum::<f64>() * uc.v_uc)
        .sum()
}

pub fn cutoff_volume(ledger: &CutoffLedger) -> f64 {
    ledger.v_co
}

/// Surface samples `(x, y)`, sorted by `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoughnessProfile {
    points: Vec<[f64; 2]>,
}

impl RoughnessProfile {
    pub fn new(mut points: Vec<[f64; 2]>) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(EcmError::InvalidInput("profile contains non-finite samples".into()));
        }
        points.sort_by(|a, b| a[0].total_cmp(&b[0]));
        if points.len() < 2 {
            return Err(EcmError::InvalidInput(format!("profile needs at least 2 points, got {}", points.len())));
        }
        if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(EcmError::InvalidInput("profile has repeated x positions".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.points[self.points.len() - 1][0] - self.points[0][0]
    }
}

/// `(Rz, Ra)` with trapezoidal integrals over the samples.
pub fn roughness(profile: &RoughnessProfile) -> (f64, f64) {
    let p = profile.points();
    let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q[1]), hi.max(q[1])));
    let trapz = |f: &dyn Fn(f64) -> f64| -> f64 {
        p.windows(2).map(|w| 0.5 * (f(w[0][1]) + f(w[1][1])) * (w[1][0] - w[0][0])).sum()
    };
    let l = profile.length();
    let mean = trapz(&|y| y) / l;
    let ra = trapz(&|y| (y - mean).abs()) / l;
    ((hi - lo).abs(), ra)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureRecord {
    pub t: f64,
    /// Accumulated vertical charge per anode area, A s/m².
    pub q_per_a: f64,
    pub rz: f64,
    pub ra: f64,
    pub v_dis: f64,
    pub v_co: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SignatureSeries {
    records: Vec<SignatureRecord>,
}

impl SignatureSeries {
    pub fn push(&mut self, r: SignatureRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if !(r.t > last.t) {
                return Err(EcmError::Invariant(format!("series time {} does not exceed {}", r.t, last.t)));
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[SignatureRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&SignatureRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gap_widths() {
        assert_relative_eq!(analytic_gap_width(16.0, 20.0, 0.0, 1e-11, 1e-5).unwrap(), 3.2e-4, max_relative = 1e-12);
        let s = analytic_gap_width(13.7, 15.0, 3.0, 3.65e-11, 1.0 / 60.0 * 1e-3).unwrap();
        assert_relative_eq!(s, 3.6e-4, max_relative = 2e-3);
        assert_eq!(analytic_gap_width(16.0, 3.0, 3.0, 1e-11, 1e-5).unwrap(), 0.0);
        assert!(analytic_gap_width(16.0, 20.0, 0.0, 1e-11, 0.0).is_err());
    }

    #[test]
    fn cathode_ramp() {
        assert_eq!(cathode_potential(0.0, 20.0, 1e-5, 3.2e-4), 0.0);
        assert_relative_eq!(cathode_potential(1.0, 20.0, 1e-5, 3.2e-4), -0.625, max_relative = 1e-12);
        assert_relative_eq!(
            cathode_potential(3.0, 20.0, 2e-5, 3.2e-4),
            2.0 * cathode_potential(3.0, 20.0, 1e-5, 3.2e-4),
            max_relative = 1e-12
        );
    }

    #[test]
    fn volumes_of_uniform_states() {
        let uc = UnitCellGeom { v_uc: 0.5, a_uc: [1.0; 3] };
        let mut ip = vec![[IpState::new(Region::Metal); N_GP]; 3];
        let regions = vec![Region::Metal; 3];
        let cells = vec![uc; 3];
        assert_eq!(dissolved_volume(&ip, &cells, &regions), 0.0);
        ip.iter_mut().flatten().for_each(|p| p.d = 1.0);
        assert_relative_eq!(dissolved_volume(&ip, &cells, &regions), 12.0);
        ip.iter_mut().flatten().for_each(|p| p.d = 0.5);
        assert_relative_eq!(dissolved_volume(&ip, &cells, &regions), 6.0);
    }

    #[test]
    fn cutoff_single_cap() {
        let mut ledger = CutoffLedger::default();
        assert_eq!(cutoff_volume(&ledger), 0.0);
        ledger.record(0.0, (1.2 - 1.0) * 1e-12);
        assert_relative_eq!(cutoff_volume(&ledger), 2e-13, max_relative = 1e-12);
    }

    #[test]
    fn roughness_of_simple_profiles() {
        let flat = RoughnessProfile::new(vec![[0.0, 2.0], [1.0, 2.0], [3.0, 2.0]]).unwrap();
        assert_eq!(roughness(&flat), (0.0, 0.0));
        let a = 0.7;
        let square = RoughnessProfile::new(vec![[0.0, a], [1.0, a], [2.0, -a], [3.0, -a]]).unwrap();
        let (rz, ra) = roughness(&square);
        assert_relative_eq!(rz, 2.0 * a, max_relative = 1e-14);
        assert_relative_eq!(ra, a, max_relative = 1e-14);
        assert!(RoughnessProfile::new(vec![[0.0, 1.0]]).is_err());
    }

    #[test]
    fn series_rejects_time_going_back() {
        let r = SignatureRecord { t: 1.0, q_per_a: 0.0, rz: 0.0, ra: 0.0, v_dis: 0.0, v_co: 0.0 };
        let mut s = SignatureSeries::default();
        s.push(r).unwrap();
        assert!(s.push(r).is_err());
        assert_eq!(s.len(), 1);
    }
}
