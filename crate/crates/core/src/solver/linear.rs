//! Linear solves on the free-dof tangent.
//!
//! Symbolic factorizations are computed once; the sparsity never changes.
//! `BlockGmres` is flexible GMRES preconditioned with sparse Cholesky
//! factors of the potential block and of the symmetric part of the
//! temperature block in block lower-triangular form.
//!
//! Numeric factors are kept between solves. The next tangent is first solved
//! iteratively with the old factor as preconditioner; it is refactored once
//! that takes too many iterations or fails.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Col, Side};
use serde::{Deserialize, Serialize};

use crate::error::{EcmError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearStrategy {
    /// Cholesky when only potentials are free, LU otherwise.
    #[default]
    Auto,
    Lu,
    Cholesky,
    BlockGmres,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinearStats {
    pub solves: usize,
    pub krylov_iterations: usize,
    pub fallbacks: usize,
}

pub struct LinearSolver {
    strategy: LinearStrategy,
    n_v: usize,
    krylov_tol: f64,
    lu: Option<SymbolicLu<u32>>,
    llt: Option<SymbolicLlt<u32>>,
    blocks: Option<BlockSplit>,
    spd: Option<Llt<u32, f64>>,
    block_factors: Option<(Llt<u32, f64>, Llt<u32, f64>)>,
    pub stats: LinearStats,
}

/// Iterations allowed with a stale factor before giving up on it.
const REUSE_MAX_ITER: usize = 40;
/// Iteration count above which the factor is refreshed for the next solve.
const REFACTOR_AFTER: usize = 12;

impl LinearSolver {
    /// `n_v` free potentials come first in the unknown ordering.
    pub fn new(strategy: LinearStrategy, n_v: usize, n_free: usize, krylov_tol: f64) -> Self {
        let strategy = match strategy {
            LinearStrategy::Auto if n_v == n_free => LinearStrategy::Cholesky,
            LinearStrategy::Auto => LinearStrategy::Lu,
            s => s,
        };
        Self {
            strategy,
            n_v,
            krylov_tol,
            lu: None,
            llt: None,
            blocks: None,
            spd: None,
            block_factors: None,
            stats: LinearStats::default(),
        }
    }

    pub fn strategy(&self) -> LinearStrategy {
        self.strategy
    }

    pub fn solve(&mut self, k: SparseColMatRef<'_, u32, f64>, b: &[f64]) -> Result<Vec<f64>> {
        self.stats.solves += 1;
        if b.is_empty() {
            return Ok(Vec::new());
        }
        match self.strategy {
            LinearStrategy::Cholesky => match self.cholesky(k, b) {
                Ok(x) => Ok(x),
                Err(_) => {
                    log::warn!("tangent is not positive definite; switching to LU");
                    self.stats.fallbacks += 1;
                    self.strategy = LinearStrategy::Lu;
                    self.lu_solve(k, b)
                }
            },
            LinearStrategy::BlockGmres => {
                if let Some(x) = self.block_gmres(k, b)? {
                    return Ok(x);
                }
                self.stats.fallbacks += 1;
                log::warn!("preconditioned GMRES stalled; solving this system with LU");
                self.lu_solve(k, b)
            }
            _ => self.lu_solve(k, b),
        }
    }

    /// Solves with the potential–potential block only.
    pub fn solve_potential(&mut self, k: SparseColMatRef<'_, u32, f64>, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n_v {
            return Err(EcmError::InvalidInput("potential right-hand side has the wrong length".into()));
        }
        if self.n_v == 0 {
            return Ok(Vec::new());
        }
        if self.n_v == k.ncols() {
            return match self.cholesky(k, b) {
                Ok(x) => Ok(x),
                Err(_) => self.lu_solve(k, b),
            };
        }
        let split = self.split(k)?;
        let a_vals = split.a_values(k);
        let a = SparseColMatRef::new(split.a.as_ref(), &a_vals);
        let llt = Llt::try_new_with_symbolic(split.a_llt.clone(), a, Side::Lower)
            .map_err(|e| EcmError::Singular(format!("potential block: {e:?}")))?;
        Ok(to_vec(&llt.solve(&to_col(b))))
    }

    fn lu_solve(&mut self, k: SparseColMatRef<'_, u32, f64>, b: &[f64]) -> Result<Vec<f64>> {
        if self.lu.is_none() {
            self.lu = Some(
                SymbolicLu::try_new(k.symbolic())
                    .map_err(|e| EcmError::Singular(format!("symbolic LU failed: {e:?}")))?,
            );
        }
        let sym = self.lu.clone().expect("symbolic LU");
        let lu = Lu::try_new_with_symbolic(sym, k).map_err(|e| EcmError::Singular(format!("LU failed: {e:?}")))?;
        let x = to_vec(&lu.solve(&to_col(b)));
        check_finite(&x)?;
        Ok(x)
    }

    fn cholesky(&mut self, k: SparseColMatRef<'_, u32, f64>, b: &[f64]) -> Result<Vec<f64>> {
        if let Some(f) = &self.spd {
            let (x, iters, ok) =
                pcg(|x, y| csc_matvec(k, x, y), |r| to_vec(&f.solve(&to_col(r))), b, self.krylov_tol, REUSE_MAX_ITER);
            self.stats.krylov_iterations += iters;
            if ok && x.iter().all(|v| v.is_finite()) {
                if iters > REFACTOR_AFTER {
                    self.spd = None;
                }
                return Ok(x);
            }
        }
        if self.llt.is_none() {
            self.llt = Some(
                SymbolicLlt::try_new(k.symbolic(), Side::Lower)
                    .map_err(|e| EcmError::Singular(format!("symbolic Cholesky failed: {e:?}")))?,
            );
        }
        let sym = self.llt.clone().expect("symbolic Cholesky");
        self.spd = None;
        let llt = Llt::try_new_with_symbolic(sym, k, Side::Lower)
            .map_err(|e| EcmError::Singular(format!("Cholesky failed: {e:?}")))?;
        let x = to_vec(&llt.solve(&to_col(b)));
        check_finite(&x)?;
        self.spd = Some(llt);
        Ok(x)
    }

    fn split(&mut self, k: SparseColMatRef<'_, u32, f64>) -> Result<&BlockSplit> {
        if self.blocks.is_none() {
            self.blocks = Some(BlockSplit::new(k, self.n_v)?);
        }
        Ok(self.blocks.as_ref().expect("block split"))
    }

    fn block_gmres(&mut self, k: SparseColMatRef<'_, u32, f64>, b: &[f64]) -> Result<Option<Vec<f64>>> {
        self.split(k)?;
        if self.block_factors.is_some() {
            let (x, iters, ok) = self.block_iterate(k, b, REUSE_MAX_ITER);
            if ok {
                if iters > REFACTOR_AFTER {
                    self.block_factors = None;
                }
                check_finite(&x)?;
                return Ok(Some(x));
            }
        }
        self.block_factors = None;
        let split = self.blocks.as_ref().expect("block split");
        let a_vals = split.a_values(k);
        let d_vals = split.d_values(k);
        let a = SparseColMatRef::new(split.a.as_ref(), &a_vals);
        let d = SparseColMatRef::new(split.d.as_ref(), &d_vals);
        let (Ok(a_f), Ok(d_f)) = (
            Llt::try_new_with_symbolic(split.a_llt.clone(), a, Side::Lower),
            Llt::try_new_with_symbolic(split.d_llt.clone(), d, Side::Lower),
        ) else {
            return Ok(None);
        };
        self.block_factors = Some((a_f, d_f));
        let (x, _, ok) = self.block_iterate(k, b, 400);
        if !ok {
            self.block_factors = None;
            return Ok(None);
        }
        check_finite(&x)?;
        Ok(Some(x))
    }

    /// FGMRES with the cached block factors.
    fn block_iterate(&mut self, k: SparseColMatRef<'_, u32, f64>, b: &[f64], max_iter: usize) -> (Vec<f64>, usize, bool) {
        let split = self.blocks.as_ref().expect("block split");
        let (a_f, d_f) = self.block_factors.as_ref().expect("block factors");
        let nv = split.nv;
        let precond = |r: &[f64]| -> Vec<f64> {
            let xv = to_vec(&a_f.solve(&to_col(&r[..nv])));
            let mut rt = r[nv..].to_vec();
            split.sub_c_times(k, &xv, &mut rt);
            let xt = to_vec(&d_f.solve(&to_col(&rt)));
            let mut x = xv;
            x.extend_from_slice(&xt);
            x
        };
        let out = fgmres(|x, y| csc_matvec(k, x, y), precond, b, self.krylov_tol, 40, max_iter);
        self.stats.krylov_iterations += out.1;
        out
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EcmError::Singular("linear solve produced non-finite values".into()))
    }
}

fn to_col(b: &[f64]) -> Col<f64> {
    Col::from_fn(b.len(), |i| b[i])
}

fn to_vec(c: &Col<f64>) -> Vec<f64> {
    (0..c.nrows()).map(|i| c[i]).collect()
}

/// `y = K x` for a column-compressed matrix.
pub fn csc_matvec(k: SparseColMatRef<'_, u32, f64>, x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    let (sym, vals) = k.parts();
    let cp = sym.col_ptr();
    let ri = sym.row_idx();
    for j in 0..sym.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for p in cp[j] as usize..cp[j + 1] as usize {
            y[ri[p] as usize] += vals[p] * xj;
        }
    }
}

/// Index maps from the full tangent to its diagonal blocks.
struct BlockSplit {
    nv: usize,
    a: SymbolicSparseColMat<u32>,
    a_src: Vec<u32>,
    a_llt: SymbolicLlt<u32>,
    d: SymbolicSparseColMat<u32>,
    /// Positions of `(i, j)` and `(j, i)` for the symmetric part.
    d_src: Vec<(u32, u32)>,
    d_llt: SymbolicLlt<u32>,
    /// First entry with a temperature row in each potential column.
    c_start: Vec<u32>,
}

impl BlockSplit {
    fn new(k: SparseColMatRef<'_, u32, f64>, nv: usize) -> Result<Self> {
        let sym = k.symbolic();
        let n = sym.ncols();
        let cp = sym.col_ptr();
        let ri = sym.row_idx();
        let find = |col: usize, row: usize| -> Result<u32> {
            let range = cp[col] as usize..cp[col + 1] as usize;
            ri[range.clone()]
                .binary_search(&(row as u32))
                .map(|k| (range.start + k) as u32)
                .map_err(|_| EcmError::Singular("tangent pattern is not structurally symmetric".into()))
        };
        let (mut a_ptr, mut a_idx, mut a_src) = (vec![0u32], Vec::new(), Vec::new());
        let mut c_start = Vec::with_capacity(nv);
        for j in 0..nv {
            let mut split = cp[j + 1];
            for p in cp[j]..cp[j + 1] {
                let i = ri[p as usize] as usize;
                if i < nv {
                    a_idx.push(i as u32);
                    a_src.push(p);
                } else if split == cp[j + 1] {
                    split = p;
                }
            }
            c_start.push(split);
            a_ptr.push(a_idx.len() as u32);
        }
        let (mut d_ptr, mut d_idx, mut d_src) = (vec![0u32], Vec::new(), Vec::new());
        for j in nv..n {
            for p in cp[j]..cp[j + 1] {
                let i = ri[p as usize] as usize;
                if i >= nv {
                    d_idx.push((i - nv) as u32);
                    d_src.push((p, find(i, j)?));
                }
            }
            d_ptr.push(d_idx.len() as u32);
        }
        let nt = n - nv;
        let a = SymbolicSparseColMat::new_checked(nv, nv, a_ptr, None, a_idx);
        let d = SymbolicSparseColMat::new_checked(nt, nt, d_ptr, None, d_idx);
        let a_llt = SymbolicLlt::try_new(a.as_ref(), Side::Lower)
            .map_err(|e| EcmError::Singular(format!("symbolic Cholesky of the potential block: {e:?}")))?;
        let d_llt = SymbolicLlt::try_new(d.as_ref(), Side::Lower)
            .map_err(|e| EcmError::Singular(format!("symbolic Cholesky of the temperature block: {e:?}")))?;
        Ok(Self { nv, a, a_src, a_llt, d, d_src, d_llt, c_start })
    }

    fn a_values(&self, k: SparseColMatRef<'_, u32, f64>) -> Vec<f64> {
        let vals = k.parts().1;
        self.a_src.iter().map(|&p| vals[p as usize]).collect()
    }

    fn d_values(&self, k: SparseColMatRef<'_, u32, f64>) -> Vec<f64> {
        let vals = k.parts().1;
        self.d_src.iter().map(|&(p, q)| 0.5 * (vals[p as usize] + vals[q as usize])).collect()
    }

    /// `rt -= C xv` with `C` the temperature-row, potential-column block.
    fn sub_c_times(&self, k: SparseColMatRef<'_, u32, f64>, xv: &[f64], rt: &mut [f64]) {
        let (sym, vals) = k.parts();
        let cp = sym.col_ptr();
        let ri = sym.row_idx();
        for j in 0..self.nv {
            for p in self.c_start[j] as usize..cp[j + 1] as usize {
                rt[ri[p] as usize - self.nv] -= vals[p] * xv[j];
            }
        }
    }
}

/// Preconditioned conjugate gradients from a zero initial guess, with the
/// same return convention as [`fgmres`].
pub fn pcg(
    matvec: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize, bool) {
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return (x, 0, true);
    }
    let target = tol * b_norm;
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=max_iter {
        matvec(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return (x, it, false);
        }
        let alpha = rz / pq;
        x.iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
        r.iter_mut().zip(&q).for_each(|(a, b)| *a -= alpha * b);
        if dot(&r, &r).sqrt() <= target {
            return (x, it, true);
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(a, b)| *a = b + beta * *a);
    }
    (x, max_iter, false)
}

/// Restarted flexible GMRES from a zero initial guess. Returns the solution,
/// the iteration count and whether `‖b − K x‖ ≤ tol ‖b‖` was reached.
pub fn fgmres(
    matvec: impl Fn(&[f64], &mut [f64]),
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<f64>, usize, bool) {
    let n = b.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let norm = |a: &[f64]| dot(a, a).sqrt();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return (x, 0, true);
    }
    let target = tol * b_norm;
    let mut r = b.to_vec();
    let mut beta = b_norm;
    let mut iters = 0;
    let mut w = vec![0.0; n];
    while iters < max_iter {
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|x| x / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            let zk = precond(&v[k]);
            matvec(&zk, &mut w);
            z.push(zk);
            for i in 0..=k {
                let hik = dot(&w, &v[i]);
                h[i][k] = hik;
                w.iter_mut().zip(&v[i]).for_each(|(a, b)| *a -= hik * b);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            (cs[k], sn[k]) = if denom == 0.0 { (1.0, 0.0) } else { (h[k][k] / denom, h[k + 1][k] / denom) };
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iters += 1;
            k_used = k + 1;
            if g[k + 1].abs() <= target || iters >= max_iter || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|x| x / wn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.iter_mut().zip(zi).for_each(|(a, b)| *a += yi * b);
        }
        matvec(&x, &mut w);
        r.iter_mut().zip(b.iter().zip(&w)).for_each(|(ri, (bi, wi))| *ri = bi - wi);
        beta = norm(&r);
        if beta <= target {
            return (x, iters, true);
        }
    }
    (x, iters, false)
}
