//! Machined-surface extraction per element column.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{Mesh, Region, UnitCellGeom};

/// `vertical` points from the workpiece into the gap; `lateral` runs along
/// the surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceAxes {
    pub vertical: usize,
    pub lateral: usize,
}

impl SurfaceAxes {
    pub const Y_UP: SurfaceAxes = SurfaceAxes { vertical: 1, lateral: 0 };
    pub const X_UP: SurfaceAxes = SurfaceAxes { vertical: 0, lateral: 1 };
}

fn column_key(x: f64, scale: f64) -> i64 {
    (x / scale).round() as i64
}

fn key_scale(mesh: &Mesh, axis: usize) -> f64 {
    let (lo, hi) = mesh
        .nodes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[axis]), hi.max(p[axis])));
    ((hi - lo) * 1e-9).max(f64::MIN_POSITIVE)
}

/// Centre of the outermost active element in every column.
pub fn active_profile(mesh: &Mesh, active: &[bool], axes: SurfaceAxes) -> Vec<[f64; 2]> {
    let scale = key_scale(mesh, axes.lateral);
    let mut top: BTreeMap<i64, [f64; 2]> = BTreeMap::new();
    for e in (0..mesh.n_elements()).filter(|&e| active[e]) {
        let c = mesh.centroid(e);
        let p = [c[axes.lateral], c[axes.vertical]];
        top.entry(column_key(p[0], scale)).and_modify(|q| if p[1] > q[1] { *q = p }).or_insert(p);
    }
    top.into_values().collect()
}

/// Sub-element surface height per column: the initial top of the metal
/// minus the dissolved height `Σ d̄ V_el / A_el`. Only columns holding an
/// element flagged in `surface` are reported.
pub fn equivalent_surface(
    mesh: &Mesh,
    mean_d: &[f64],
    cells: &[UnitCellGeom],
    surface: &[bool],
    axes: SurfaceAxes,
) -> Vec<[f64; 2]> {
    let scale = key_scale(mesh, axes.lateral);
    let mut cols: BTreeMap<i64, (f64, f64, f64, bool)> = BTreeMap::new();
    for e in (0..mesh.n_elements()).filter(|&e| mesh.regions[e] == Region::Metal) {
        let c = mesh.centroid(e);
        let h = cells[e].v_uc / cells[e].a_uc[axes.vertical];
        let col = cols.entry(column_key(c[axes.lateral], scale)).or_insert((c[axes.lateral], f64::NEG_INFINITY, 0.0, false));
        col.1 = col.1.max(c[axes.vertical] + 0.5 * h);
        col.2 += mean_d[e] * h;
        col.3 |= surface[e];
    }
    cols.into_values().filter(|c| c.3).map(|(x, top, removed, _)| [x, top - removed]).collect()
}

/// Least-squares line `y = a x + b`, returned as `(a, b)`.
pub fn fit_line(points: &[[f64; 2]]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p[0] - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p[0] - mx) * (p[1] - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_scenario_mesh, GapStrip, GeometrySpec, MeshSpec};

    #[test]
    fn line_fit_recovers_slope() {
        let pts: Vec<[f64; 2]> = (0..7).map(|i| [i as f64, 0.25 * i as f64 - 1.0]).collect();
        let (a, b) = fit_line(&pts).unwrap();
        assert!((a - 0.25).abs() < 1e-14 && (b + 1.0).abs() < 1e-14);
        assert!(fit_line(&pts[..1]).is_none());
    }

    #[test]
    fn strip_surface_sits_on_the_metal_edge() {
        let geo = GeometrySpec::GapStrip(GapStrip { l: 1.0, s: 0.4, g: 0.1 });
        let mesh = build_scenario_mesh(&geo, &MeshSpec::uniform(5)).unwrap();
        let cells = mesh.unit_cells().unwrap();
        let d = vec![0.0; mesh.n_elements()];
        let all = vec![true; mesh.n_elements()];
        let surf = equivalent_surface(&mesh, &d, &cells, &all, SurfaceAxes::X_UP);
        assert_eq!(surf.len(), 5);
        assert!(surf.iter().all(|p| (p[1] - 1.0).abs() < 1e-12));
    }
}
