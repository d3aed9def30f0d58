use serde::{Deserialize, Serialize};

use crate::error::{EcmError, Result};
use crate::solver::assembly::ResidualNorms;

/// Per-field stopping rule:
/// `‖R_free‖ ≤ max(tol_rel · max(‖R⁰_free‖, ‖R_reaction‖), tol_abs)`.
///
/// The reaction norm keeps the test meaningful when the first residual is
/// already at roundoff relative to the fluxes through the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSettings {
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub max_iter: usize,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol_rel: 1e-8, tol_abs: 0.0, max_iter: 25 }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_rel >= 0.0) || !(self.tol_abs >= 0.0) || (self.tol_rel == 0.0 && self.tol_abs == 0.0) {
            return Err(EcmError::Config(format!(
                "newton tolerances must be non-negative and not both zero (tol_rel={}, tol_abs={})",
                self.tol_rel, self.tol_abs
            )));
        }
        if self.max_iter == 0 {
            return Err(EcmError::Config("newton max_iter must be at least 1".into()));
        }
        Ok(())
    }

    fn converged(&self, first: &ResidualNorms, now: &ResidualNorms) -> bool {
        (0..2).all(|f| {
            let reference = first.free[f].max(now.reaction[f]);
            now.free[f] <= (self.tol_rel * reference).max(self.tol_abs)
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Free residual norms `[potential, temperature]` per evaluation.
    pub history: Vec<[f64; 2]>,
}

pub trait NonlinearProblem {
    /// Evaluates the residual at the current iterate, and the tangent if asked.
    fn assemble(&mut self, with_tangent: bool) -> Result<ResidualNorms>;
    /// Solves the last tangent for the increment and applies it.
    fn solve_and_update(&mut self) -> Result<()>;
}

pub fn newton_solve(problem: &mut impl NonlinearProblem, settings: &NewtonSettings) -> Result<NewtonReport> {
    let mut report = NewtonReport::default();
    let first = problem.assemble(true)?;
    report.history.push(first.free);
    if settings.converged(&first, &first) {
        return Ok(report);
    }
    loop {
        problem.solve_and_update()?;
        report.iterations += 1;
        let now = problem.assemble(false)?;
        report.history.push(now.free);
        if now.free.iter().any(|r| !r.is_finite()) {
            break;
        }
        if settings.converged(&first, &now) {
            return Ok(report);
        }
        if report.iterations >= settings.max_iter {
            break;
        }
        problem.assemble(true)?;
    }
    Err(EcmError::NoConvergence { iterations: report.iterations, history: report.history })
}
