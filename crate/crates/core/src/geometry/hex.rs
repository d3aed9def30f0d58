//! Volume, axis cross-sections and unit-cell quantities of a single hexahedron.

use crate::error::{EcmError, Result};
use crate::fem::shape::{jacobian, shape_trilinear, GAUSS_XI};

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Per-integration-point share of an element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitCellGeom {
    pub v_uc: f64,
    /// Sections normal to the global x, y, z axes.
    pub a_uc: [f64; 3],
}

pub fn element_volume(x: &[[f64; 3]; 8]) -> Result<f64> {
    let mut v = 0.0;
    for xi in GAUSS_XI {
        let (_, dn) = shape_trilinear(xi);
        let det = jacobian(x, &dn).determinant();
        if !(det > 0.0) {
            return Err(EcmError::Geometry { element: 0, reason: format!("inverted element, det J = {det:.3e}") });
        }
        v += det;
    }
    Ok(v)
}

/// Areas of the polygons cut from the element by the planes through its
/// centroid normal to each global axis.
pub fn element_axis_areas(x: &[[f64; 3]; 8]) -> Result<[f64; 3]> {
    let mut c = [0.0; 3];
    for p in x {
        for k in 0..3 {
            c[k] += p[k] / 8.0;
        }
    }
    let size = x.iter().flat_map(|p| p.iter().zip(&c).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
    let tol = 1e-12 * size;
    let mut out = [0.0; 3];
    for axis in 0..3 {
        let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(12);
        let push = |p: [f64; 3], pts: &mut Vec<[f64; 2]>| {
            let q = [p[u], p[w]];
            if !pts.iter().any(|r| (r[0] - q[0]).abs() <= tol && (r[1] - q[1]).abs() <= tol) {
                pts.push(q);
            }
        };
        for [i, j] in EDGES {
            let (p, q) = (x[i], x[j]);
            let (a, b) = (p[axis] - c[axis], q[axis] - c[axis]);
            if a == 0.0 && b == 0.0 {
                push(p, &mut pts);
                push(q, &mut pts);
            } else if a * b <= 0.0 {
                let t = a / (a - b);
                push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])], &mut pts);
            }
        }
        if pts.len() < 3 {
            return Err(EcmError::Geometry {
                element: 0,
                reason: format!("section normal to axis {} has {} points", ["x", "y", "z"][axis], pts.len()),
            });
        }
        out[axis] = polygon_area(&mut pts);
    }
    Ok(out)
}

/// Shoelace area after sorting the points by angle about their centroid.
fn polygon_area(pts: &mut [[f64; 2]]) -> f64 {
    let n = pts.len() as f64;
    let cu = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cw = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    pts.sort_by(|a, b| {
        let ta = (a[1] - cw).atan2(a[0] - cu);
        let tb = (b[1] - cw).atan2(b[0] - cu);
        ta.total_cmp(&tb)
    });
    let mut s = 0.0;
    for i in 0..pts.len() {
        let (p, q) = (pts[i], pts[(i + 1) % pts.len()]);
        s += (p[0] - cu) * (q[1] - cw) - (q[0] - cu) * (p[1] - cw);
    }
    0.5 * s.abs()
}

pub fn unit_cell_geom(x: &[[f64; 3]; 8], n_gp: usize) -> Result<UnitCellGeom> {
    if n_gp != 8 {
        return Err(EcmError::InvalidInput(format!("unit cells need 8 integration points, got {n_gp}")));
    }
    let v = element_volume(x)?;
    let a = element_axis_areas(x)?;
    let k = n_gp as f64;
    Ok(UnitCellGeom { v_uc: v / k, a_uc: a.map(|a| a / k) })
}
