//! Dirichlet elimination and scatter of element systems into one sparse
//! matrix over the free unknowns, ordered: free potentials, then free temperatures.

use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use nalgebra::Vector3;

use crate::error::{EcmError, Result};
use crate::fem::element::{element_system, element_system_into, ElementInput, ElementSystem, Mode};
use crate::fem::{EffectiveProps, GaussPointData, N_GP};
use crate::geometry::Mesh;

const FIXED: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct DofMap {
    n_nodes: usize,
    /// Free index of `(node, field)` at `2 * node + field`.
    free: Vec<u32>,
    pub n_free_v: usize,
    pub n_free_t: usize,
}

impl DofMap {
    pub fn new(fixed_v: &[bool], fixed_t: &[bool]) -> Self {
        let n_nodes = fixed_v.len();
        let mut free = vec![FIXED; 2 * n_nodes];
        let mut next = 0u32;
        for (field, fixed) in [fixed_v, fixed_t].into_iter().enumerate() {
            for n in 0..n_nodes {
                if !fixed[n] {
                    free[2 * n + field] = next;
                    next += 1;
                }
            }
        }
        let n_free_v = fixed_v.iter().filter(|f| !**f).count();
        Self { n_nodes, free, n_free_v, n_free_t: next as usize - n_free_v }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_free(&self) -> usize {
        self.n_free_v + self.n_free_t
    }

    /// Field 0 is the potential, field 1 the temperature.
    #[inline]
    pub fn free_index(&self, node: usize, field: usize) -> Option<usize> {
        let i = self.free[2 * node + field];
        (i != FIXED).then_some(i as usize)
    }
}

/// Free-dof sparsity with per-element scatter positions.
pub struct Assembler {
    pub dofs: DofMap,
    symbolic: SymbolicSparseColMat<u32>,
    /// Position in the value array for local entry `(a, b)` at `16 * b + a`.
    scatter: Vec<[u32; 256]>,
    conn: Vec<[usize; 8]>,
}

impl Assembler {
    pub fn new(mesh: &Mesh, dofs: DofMap) -> Result<Self> {
        let n = dofs.n_free();
        if n > u32::MAX as usize / 2 {
            return Err(EcmError::InvalidInput(format!("{n} unknowns exceed the index range")));
        }
        let local = |conn: &[usize; 8], a: usize| dofs.free_index(conn[a % 8], a / 8);
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for conn in &mesh.elements {
            for b in 0..16 {
                let Some(col) = local(conn, b) else { continue };
                for a in 0..16 {
                    if let Some(row) = local(conn, a) {
                        pairs.push((col as u32, row as u32));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut col_ptr = vec![0u32; n + 1];
        for &(c, _) in &pairs {
            col_ptr[c as usize + 1] += 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let row_idx: Vec<u32> = pairs.iter().map(|&(_, r)| r).collect();
        let mut scatter = Vec::with_capacity(mesh.elements.len());
        for conn in &mesh.elements {
            let mut pos = [FIXED; 256];
            for b in 0..16 {
                let Some(col) = local(conn, b) else { continue };
                let range = col_ptr[col] as usize..col_ptr[col + 1] as usize;
                for a in 0..16 {
                    if let Some(row) = local(conn, a) {
                        let k = row_idx[range.clone()].binary_search(&(row as u32)).expect("pattern entry");
                        pos[16 * b + a] = (range.start + k) as u32;
                    }
                }
            }
            scatter.push(pos);
        }
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        Ok(Self { dofs, symbolic, scatter, conn: mesh.elements.clone() })
    }

    pub fn symbolic(&self) -> &SymbolicSparseColMat<u32> {
        &self.symbolic
    }

    pub fn nnz(&self) -> usize {
        self.symbolic.row_idx().len()
    }

    pub fn matrix<'a>(&'a self, values: &'a [f64]) -> SparseColMatRef<'a, u32, f64> {
        SparseColMatRef::new(self.symbolic.as_ref(), values)
    }

    /// Adds one element tangent into `values`.
    pub fn scatter_tangent(&self, e: usize, sys: &ElementSystem, mode: Mode, values: &mut [f64]) {
        let pos = &self.scatter[e];
        let blocks: [[Option<nalgebra::SMatrix<f64, 8, 8>>; 2]; 2] = match mode {
            Mode::Residual => return,
            Mode::Potential => [[Some(sys.k_vv + sys.c_vv), None], [None, None]],
            Mode::Full => [
                [Some(sys.k_vv + sys.c_vv), Some(sys.k_vt)],
                [Some(sys.k_tv + sys.c_tv), Some(sys.k_tt + sys.c_tt)],
            ],
        };
        for (bi, row_blocks) in blocks.iter().enumerate() {
            for (bj, block) in row_blocks.iter().enumerate() {
                let Some(m) = block else { continue };
                for b in 0..8 {
                    let col = 8 * bj + b;
                    for a in 0..8 {
                        let p = pos[16 * col + 8 * bi + a];
                        if p != FIXED {
                            values[p as usize] += m[(a, b)];
                        }
                    }
                }
            }
        }
    }

    pub fn conn(&self, e: usize) -> &[usize; 8] {
        &self.conn[e]
    }
}

/// Everything an element needs besides the current iterate.
pub struct StepData<'a> {
    pub gps: &'a [[GaussPointData; N_GP]],
    pub props: &'a [[EffectiveProps; N_GP]],
    pub e_prev: &'a [[Vector3<f64>; N_GP]],
    pub theta_prev: &'a [f64],
    pub inv_dt: f64,
    pub eps0: f64,
    pub q_star: f64,
}

/// Assembled residuals (full nodal length) and free-dof tangent values.
pub struct GlobalSystem {
    pub values: Vec<f64>,
    pub r_v: Vec<f64>,
    pub r_t: Vec<f64>,
    /// Current density and field at every Gauss point of the last assembly.
    pub j: Vec<[Vector3<f64>; N_GP]>,
    pub e: Vec<[Vector3<f64>; N_GP]>,
}

impl GlobalSystem {
    pub fn new(asm: &Assembler, n_elements: usize) -> Self {
        let n = asm.dofs.n_nodes();
        Self {
            values: vec![0.0; asm.nnz()],
            r_v: vec![0.0; n],
            r_t: vec![0.0; n],
            j: vec![[Vector3::zeros(); N_GP]; n_elements],
            e: vec![[Vector3::zeros(); N_GP]; n_elements],
        }
    }

    /// Right-hand side `−R` restricted to the free unknowns.
    pub fn free_rhs(&self, dofs: &DofMap) -> Vec<f64> {
        let mut b = vec![0.0; dofs.n_free()];
        for n in 0..dofs.n_nodes() {
            if let Some(i) = dofs.free_index(n, 0) {
                b[i] = -self.r_v[n];
            }
            if let Some(i) = dofs.free_index(n, 1) {
                b[i] = -self.r_t[n];
            }
        }
        b
    }

    /// Norms of the free and the constrained residual entries, per field.
    pub fn norms(&self, dofs: &DofMap) -> ResidualNorms {
        let mut free = [0.0f64; 2];
        let mut reaction = [0.0f64; 2];
        for n in 0..dofs.n_nodes() {
            for (f, r) in [self.r_v[n], self.r_t[n]].into_iter().enumerate() {
                if dofs.free_index(n, f).is_some() {
                    free[f] += r * r;
                } else {
                    reaction[f] += r * r;
                }
            }
        }
        ResidualNorms { free: free.map(f64::sqrt), reaction: reaction.map(f64::sqrt) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualNorms {
    pub free: [f64; 2],
    pub reaction: [f64; 2],
}

pub fn assemble(
    asm: &Assembler,
    data: &StepData,
    v: &[f64],
    theta: &[f64],
    mode: Mode,
    out: &mut GlobalSystem,
) -> Result<()> {
    if mode != Mode::Residual {
        out.values.iter_mut().for_each(|x| *x = 0.0);
    }
    out.r_v.iter_mut().for_each(|x| *x = 0.0);
    out.r_t.iter_mut().for_each(|x| *x = 0.0);
    let mut sys = ElementSystem::default();
    for e in 0..data.gps.len() {
        let conn = asm.conn(e);
        let ve = conn.map(|n| v[n]);
        let te = conn.map(|n| theta[n]);
        let tp = conn.map(|n| data.theta_prev[n]);
        let input = ElementInput {
            gps: &data.gps[e],
            props: &data.props[e],
            v: &ve,
            theta: &te,
            theta_prev: &tp,
            e_prev: &data.e_prev[e],
            inv_dt: data.inv_dt,
            eps0: data.eps0,
            q_star: data.q_star,
        };
        element_system_into(&input, mode, &mut sys);
        if !sys.r_v.iter().chain(sys.r_t.iter()).all(|x| x.is_finite()) {
            return Err(EcmError::Assembly { element: e });
        }
        for (a, &n) in conn.iter().enumerate() {
            out.r_v[n] += sys.r_v[a];
            out.r_t[n] += sys.r_t[a];
        }
        out.j[e] = sys.j;
        out.e[e] = sys.e;
        asm.scatter_tangent(e, &sys, mode, &mut out.values);
    }
    if mode != Mode::Residual && !out.values.iter().all(|x| x.is_finite()) {
        let bad = (0..data.gps.len())
            .find(|&e| {
                let conn = asm.conn(e);
                let input = ElementInput {
                    gps: &data.gps[e],
                    props: &data.props[e],
                    v: &conn.map(|n| v[n]),
                    theta: &conn.map(|n| theta[n]),
                    theta_prev: &conn.map(|n| data.theta_prev[n]),
                    e_prev: &data.e_prev[e],
                    inv_dt: data.inv_dt,
                    eps0: data.eps0,
                    q_star: data.q_star,
                };
                element_system(&input, mode, e).is_err()
            })
            .unwrap_or(0);
        return Err(EcmError::Assembly { element: bad });
    }
    Ok(())
}
