//! Element residuals and their exact linearization.
//!
//! ```text
//! r_v = −∫ Bᵀ (j + j_V) dV
//! r_θ =  ∫ N (ρ̄ c̄ θ̇ − j·E − q*) dV − ∫ Bᵀ q dV
//! ```
//!
//! Material values are frozen per step, so the tangent blocks below are the
//! exact derivatives of these residuals with respect to the nodal unknowns.

use nalgebra::{SMatrix, SVector, Vector3};

use crate::error::{EcmError, Result};
use crate::fem::constitutive::{constitutive, EffectiveProps, Fluxes};
use crate::fem::shape::{GaussPointData, N_GP};

pub type Mat8 = SMatrix<f64, 8, 8>;
pub type Vec8 = SVector<f64, 8>;

/// Which parts of the element system to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Residual,
    /// Residuals plus the potential–potential block only.
    Potential,
    Full,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ElementSystem {
    pub k_vv: Mat8,
    pub k_vt: Mat8,
    pub k_tv: Mat8,
    pub k_tt: Mat8,
    pub c_vv: Mat8,
    pub c_tv: Mat8,
    pub c_tt: Mat8,
    pub r_v: Vec8,
    pub r_t: Vec8,
    /// Total current density at each Gauss point.
    pub j: [Vector3<f64>; N_GP],
    pub e: [Vector3<f64>; N_GP],
}

impl ElementSystem {
    /// The 16×16 tangent ordered (v₀..v₇, θ₀..θ₇).
    pub fn tangent(&self) -> SMatrix<f64, 16, 16> {
        let mut k = SMatrix::<f64, 16, 16>::zeros();
        k.fixed_view_mut::<8, 8>(0, 0).copy_from(&(self.k_vv + self.c_vv));
        k.fixed_view_mut::<8, 8>(0, 8).copy_from(&self.k_vt);
        k.fixed_view_mut::<8, 8>(8, 0).copy_from(&(self.k_tv + self.c_tv));
        k.fixed_view_mut::<8, 8>(8, 8).copy_from(&(self.k_tt + self.c_tt));
        k
    }

    pub fn residual(&self) -> SVector<f64, 16> {
        let mut r = SVector::<f64, 16>::zeros();
        r.fixed_rows_mut::<8>(0).copy_from(&self.r_v);
        r.fixed_rows_mut::<8>(8).copy_from(&self.r_t);
        r
    }
}

pub struct ElementInput<'a> {
    pub gps: &'a [GaussPointData; N_GP],
    pub props: &'a [EffectiveProps; N_GP],
    pub v: &'a [f64; 8],
    pub theta: &'a [f64; 8],
    pub theta_prev: &'a [f64; 8],
    pub e_prev: &'a [Vector3<f64>; N_GP],
    pub inv_dt: f64,
    pub eps0: f64,
    pub q_star: f64,
}

pub fn element_system(input: &ElementInput, mode: Mode, element: usize) -> Result<ElementSystem> {
    let mut out = ElementSystem::default();
    element_system_into(input, mode, &mut out);
    let finite = out.r_v.iter().chain(out.r_t.iter()).all(|x| x.is_finite())
        && (mode == Mode::Residual || out.k_vv.iter().chain(out.c_vv.iter()).all(|x| x.is_finite()))
        && (mode != Mode::Full
            || [&out.k_vt, &out.k_tv, &out.k_tt, &out.c_tv, &out.c_tt].iter().all(|m| m.iter().all(|x| x.is_finite())));
    if !finite {
        return Err(EcmError::Assembly { element });
    }
    Ok(out)
}

/// Same as [`element_system`] without the finiteness check, reusing `out`.
/// Blocks that `mode` does not evaluate are left untouched.
pub fn element_system_into(input: &ElementInput, mode: Mode, out: &mut ElementSystem) {
    out.r_v.fill(0.0);
    out.r_t.fill(0.0);
    if mode != Mode::Residual {
        out.k_vv.fill(0.0);
        out.c_vv.fill(0.0);
    }
    if mode == Mode::Full {
        for m in [&mut out.k_vt, &mut out.k_tv, &mut out.k_tt, &mut out.c_tv, &mut out.c_tt] {
            m.fill(0.0);
        }
    }
    let inv_dt = input.inv_dt;
    for g in 0..N_GP {
        let gp = &input.gps[g];
        let p = &input.props[g];
        let f: Fluxes = constitutive(gp, p, input.v, input.theta, &input.e_prev[g], inv_dt, input.eps0);
        out.j[g] = f.j;
        out.e[g] = f.e;
        let dv = gp.dv;
        let theta: f64 = (0..8).map(|a| gp.n[a] * input.theta[a]).sum();
        let theta_prev: f64 = (0..8).map(|a| gp.n[a] * input.theta_prev[a]).sum();
        let joule = if p.joule_active { f.j.dot(&f.e) } else { 0.0 };
        let jt = (f.j + f.j_v) * dv;
        let q = f.q * dv;
        let source = (p.rho_v * p.c_theta * (theta - theta_prev) * inv_dt - joule - input.q_star) * dv;
        for a in 0..8 {
            let ba = gp.b.column(a);
            out.r_v[a] -= ba.dot(&jt);
            out.r_t[a] += gp.n[a] * source - ba.dot(&q);
        }

        if mode == Mode::Residual {
            continue;
        }
        let gram = gram(gp, dv);
        let eps = input.eps0 * p.eps_r;
        add_scaled(&mut out.k_vv, &gram, p.k_e);
        add_scaled(&mut out.c_vv, &gram, 2.0 * eps * inv_dt);
        if mode == Mode::Potential {
            continue;
        }
        add_scaled(&mut out.k_vt, &gram, p.k_e * p.alpha);
        add_scaled(&mut out.k_tv, &gram, p.pi * p.k_e);
        add_scaled(&mut out.c_tv, &gram, p.pi * eps * inv_dt);
        add_scaled(&mut out.k_tt, &gram, p.pi * p.k_e * p.alpha + p.k_theta);
        let m = p.rho_v * p.c_theta * inv_dt * dv;
        for b in 0..8 {
            for a in 0..8 {
                out.c_tt[(a, b)] += m * gp.n[a] * gp.n[b];
            }
        }
        if p.joule_active {
            let n = Vec8::from(gp.n);
            let bt = gp.b.transpose();
            let nd = n * dv;
            out.k_tv += nd * (bt * (f.j_l * 2.0 + f.j_s)).transpose();
            out.c_tv += nd * (bt * (f.e * (eps * inv_dt) + f.j_v)).transpose();
            out.k_tt += nd * (bt * (f.e * (p.k_e * p.alpha))).transpose();
        }
    }
}

/// `Bᵀ B dV`, column-major.
fn gram(gp: &GaussPointData, dv: f64) -> [f64; 64] {
    let mut g = [0.0; 64];
    for b in 0..8 {
        let cb = gp.b.column(b);
        for a in 0..=b {
            let ca = gp.b.column(a);
            let x = (ca[0] * cb[0] + ca[1] * cb[1] + ca[2] * cb[2]) * dv;
            g[a + 8 * b] = x;
            g[b + 8 * a] = x;
        }
    }
    g
}

fn add_scaled(m: &mut Mat8, g: &[f64; 64], c: f64) {
    for (x, y) in m.as_mut_slice().iter_mut().zip(g) {
        *x += c * y;
    }
}
