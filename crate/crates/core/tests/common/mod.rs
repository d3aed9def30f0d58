//! Helpers shared by several integration tests.
#![allow(dead_code)]

use ecm_core::fem::shape::gauss_points;
use ecm_core::fem::{element_system, EffectiveProps, ElementInput, Mode};
use nalgebra::{SMatrix, Vector3};
use proptest::prelude::*;

pub const CUBE: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [1.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 1.0],
    [1.0, 1.0, 1.0],
    [0.0, 1.0, 1.0],
];

/// A jittered, scaled cube with O(1) properties and nodal values.
#[derive(Clone, Debug)]
pub struct ElementState {
    pub coords: [[f64; 3]; 8],
    pub props: EffectiveProps,
    pub v: [f64; 8],
    pub theta: [f64; 8],
    pub theta_prev: [f64; 8],
    pub e_prev: [f64; 3],
    pub inv_dt: f64,
}

fn arr8(lo: f64, hi: f64) -> impl Strategy<Value = [f64; 8]> {
    prop::array::uniform8(lo..hi)
}

pub fn element_state() -> impl Strategy<Value = ElementState> {
    let shape = (prop::array::uniform8(prop::array::uniform3(-0.15..0.15f64)), 0.5..2.0f64);
    let props = (0.5..2.0f64, 0.5..2.0f64, 0.05..0.5f64, 0.5..2.0f64, 0.5..2.0f64, 0.5..2.0f64, 0.5..2.0f64);
    (shape, props, any::<bool>(), arr8(-1.0, 1.0), arr8(0.5, 1.5), arr8(0.5, 1.5), prop::array::uniform3(-1.0..1.0f64), 0.5..2.0f64)
        .prop_map(|((jitter, scale), (k_e, k_theta, alpha, theta_n, rho_v, c_theta, eps_r), joule, v, theta, theta_prev, e_prev, inv_dt)| {
            let mut coords = CUBE;
            for (p, j) in coords.iter_mut().zip(jitter) {
                for k in 0..3 {
                    p[k] = scale * (p[k] + j[k]);
                }
            }
            let props = EffectiveProps { k_e, k_theta, alpha, pi: alpha * theta_n, rho_v, c_theta, eps_r, joule_active: joule };
            ElementState { coords, props, v, theta, theta_prev, e_prev, inv_dt }
        })
}

fn system(s: &ElementState, v: &[f64; 8], theta: &[f64; 8], mode: Mode) -> ecm_core::fem::ElementSystem {
    let gps = gauss_points(&s.coords, 0).unwrap();
    let props = [s.props; 8];
    let e_prev = [Vector3::from(s.e_prev); 8];
    let input = ElementInput {
        gps: &gps,
        props: &props,
        v,
        theta,
        theta_prev: &s.theta_prev,
        e_prev: &e_prev,
        inv_dt: s.inv_dt,
        eps0: 1.0,
        q_star: 0.3,
    };
    element_system(&input, mode, 0).unwrap()
}

/// Largest relative max-norm error of the four 8×8 tangent blocks against
/// central differences of the residual, ordered vv, vθ, θv, θθ.
pub fn tangent_block_errors(s: &ElementState) -> [f64; 4] {
    let k = system(s, &s.v, &s.theta, Mode::Full).tangent();
    let mut u = [0.0; 16];
    u[..8].copy_from_slice(&s.v);
    u[8..].copy_from_slice(&s.theta);
    let residual = |u: &[f64; 16]| {
        let v: [f64; 8] = std::array::from_fn(|a| u[a]);
        let theta: [f64; 8] = std::array::from_fn(|a| u[8 + a]);
        system(s, &v, &theta, Mode::Residual).residual()
    };
    let h = 1e-6;
    let mut fd = SMatrix::<f64, 16, 16>::zeros();
    for i in 0..16 {
        let (mut up, mut dn) = (u, u);
        up[i] += h;
        dn[i] -= h;
        fd.set_column(i, &((residual(&up) - residual(&dn)) / (2.0 * h)));
    }
    [(0, 0), (0, 8), (8, 0), (8, 8)].map(|(r, c)| {
        let a = k.fixed_view::<8, 8>(r, c);
        let b = fd.fixed_view::<8, 8>(r, c);
        let scale = b.amax().max(a.amax());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).amax() / scale
        }
    })
}
