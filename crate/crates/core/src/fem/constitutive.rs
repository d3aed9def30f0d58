use nalgebra::Vector3;

use crate::fem::shape::GaussPointData;
use crate::materials::{MaterialTable, PointValues};

/// Mixed material values frozen at the start of a step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EffectiveProps {
    pub k_e: f64,
    pub k_theta: f64,
    pub alpha: f64,
    /// Peltier coefficient ᾱ θ_n.
    pub pi: f64,
    pub rho_v: f64,
    pub c_theta: f64,
    pub eps_r: f64,
    pub joule_active: bool,
}

impl EffectiveProps {
    pub fn from_values(v: &PointValues, theta_n: f64, joule_active: bool) -> Self {
        Self {
            k_e: v.k_e,
            k_theta: v.k_theta,
            alpha: v.alpha,
            pi: v.alpha * theta_n,
            rho_v: v.rho_v,
            c_theta: v.c_theta,
            eps_r: v.eps_r,
            joule_active,
        }
    }

    pub fn freeze(table: &MaterialTable, d: f64, theta_n: f64, joule_active: bool) -> Self {
        Self::from_values(&table.effective_at(d, theta_n), theta_n, joule_active)
    }
}

/// Field quantities at one Gauss point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fluxes {
    pub e: Vector3<f64>,
    pub e_dot: Vector3<f64>,
    pub j_l: Vector3<f64>,
    pub j_v: Vector3<f64>,
    pub j_s: Vector3<f64>,
    pub j: Vector3<f64>,
    pub q_p: Vector3<f64>,
    pub q_f: Vector3<f64>,
    pub q: Vector3<f64>,
}

/// `inv_dt` is 1/Δt; zero drops the rate terms.
pub fn constitutive(
    gp: &GaussPointData,
    props: &EffectiveProps,
    v_e: &[f64; 8],
    theta_e: &[f64; 8],
    e_prev: &Vector3<f64>,
    inv_dt: f64,
    eps0: f64,
) -> Fluxes {
    let mut grad_v = Vector3::zeros();
    let mut grad_t = Vector3::zeros();
    for a in 0..8 {
        let col = gp.b.column(a);
        grad_v += col * v_e[a];
        grad_t += col * theta_e[a];
    }
    let e = -grad_v;
    let e_dot = (e - e_prev) * inv_dt;
    let j_l = e * props.k_e;
    let j_v = e_dot * (eps0 * props.eps_r);
    let j_s = grad_t * (-props.k_e * props.alpha);
    let j = j_l + j_v + j_s;
    let q_p = j * props.pi;
    let q_f = grad_t * (-props.k_theta);
    Fluxes { e, e_dot, j_l, j_v, j_s, j, q_p, q_f, q: q_p + q_f }
}
