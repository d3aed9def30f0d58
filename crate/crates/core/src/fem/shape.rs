//! Trilinear hexahedron: shape functions and 2×2×2 Gauss rule.

use nalgebra::{Matrix3, SMatrix};

use crate::error::{EcmError, Result};

/// Reference coordinates of the eight nodes (VTK hexahedron ordering).
pub const NODE_XI: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

pub const N_GP: usize = 8;

const G: f64 = 0.577_350_269_189_625_8;

/// Gauss points ordered like the nodes; every weight is 1.
pub const GAUSS_XI: [[f64; 3]; N_GP] = [
    [-G, -G, -G],
    [G, -G, -G],
    [G, G, -G],
    [-G, G, -G],
    [-G, -G, G],
    [G, -G, G],
    [G, G, G],
    [-G, G, G],
];

pub type Grad8 = SMatrix<f64, 3, 8>;

/// Shape values and reference gradients (rows ∂/∂ξ, ∂/∂η, ∂/∂ζ).
pub fn shape_trilinear(xi: [f64; 3]) -> ([f64; 8], Grad8) {
    let mut n = [0.0; 8];
    let mut dn = Grad8::zeros();
    for (a, p) in NODE_XI.iter().enumerate() {
        let fx = 1.0 + p[0] * xi[0];
        let fy = 1.0 + p[1] * xi[1];
        let fz = 1.0 + p[2] * xi[2];
        n[a] = 0.125 * fx * fy * fz;
        dn[(0, a)] = 0.125 * p[0] * fy * fz;
        dn[(1, a)] = 0.125 * fx * p[1] * fz;
        dn[(2, a)] = 0.125 * fx * fy * p[2];
    }
    (n, dn)
}

/// Jacobian `J[i][k] = ∂x_k/∂ξ_i` at `xi`.
pub fn jacobian(coords: &[[f64; 3]; 8], dn: &Grad8) -> Matrix3<f64> {
    dn * SMatrix::<f64, 8, 3>::from_fn(|a, k| coords[a][k])
}

/// Kinematic data of one Gauss point.
#[derive(Clone, Copy, Debug)]
pub struct GaussPointData {
    pub n: [f64; 8],
    /// Physical gradients, 3×8.
    pub b: Grad8,
    /// Gauss weight times det J.
    pub dv: f64,
}

impl GaussPointData {
    pub fn new(coords: &[[f64; 3]; 8], xi: [f64; 3], weight: f64, element: usize) -> Result<Self> {
        let (n, dn) = shape_trilinear(xi);
        let j = jacobian(coords, &dn);
        let det = j.determinant();
        if !(det > 0.0) || !det.is_finite() {
            return Err(EcmError::Geometry { element, reason: format!("Jacobian determinant {det:.3e} at {xi:?}") });
        }
        let jinv = j.try_inverse().ok_or_else(|| EcmError::Geometry { element, reason: "singular Jacobian".into() })?;
        Ok(Self { n, b: jinv * dn, dv: weight * det })
    }
}

pub fn gauss_points(coords: &[[f64; 3]; 8], element: usize) -> Result<[GaussPointData; N_GP]> {
    let mut out = [GaussPointData { n: [0.0; 8], b: Grad8::zeros(), dv: 0.0 }; N_GP];
    for (g, xi) in GAUSS_XI.iter().enumerate() {
        out[g] = GaussPointData::new(coords, *xi, 1.0, element)?;
    }
    Ok(out)
}
