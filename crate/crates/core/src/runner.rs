//! Runs a scenario and writes its artifacts into one directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{EcmError, Result};
use crate::postprocess::{write_csv, write_vtk, SignatureRecord, VtkFields};
use crate::scenario::ScenarioConfig;
use crate::solver::Simulation;

/// Cut-off share above which the time step is considered too coarse.
pub const CUTOFF_WARNING: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub steps: usize,
    pub t_final: f64,
    pub v_dis: f64,
    pub v_co: f64,
    /// `V_co / V_dis`, zero when nothing dissolved.
    pub cutoff_ratio: f64,
    pub q_per_a: f64,
    pub rz: f64,
    pub ra: f64,
    pub newton_iterations: usize,
    pub max_newton_iterations: usize,
    pub linear_fallbacks: usize,
    pub krylov_iterations: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, thiserror::Error)]
#[error("{error}{}", checkpoint.as_ref().map(|p| format!(" (last good state in {})", p.display())).unwrap_or_default())]
pub struct RunFailure {
    #[source]
    pub error: EcmError,
    pub checkpoint: Option<PathBuf>,
}

impl From<EcmError> for RunFailure {
    fn from(error: EcmError) -> Self {
        Self { error, checkpoint: None }
    }
}

pub fn summarize(sim: &Simulation, name: &str, wall: f64) -> RunSummary {
    let v_dis = sim.dissolved_volume();
    let v_co = sim.ledger().v_co;
    let last = sim.series().last().copied();
    let stats = sim.stats();
    RunSummary {
        name: name.into(),
        steps: sim.step_index(),
        t_final: sim.state().t,
        v_dis,
        v_co,
        cutoff_ratio: if v_dis > 0.0 { v_co / v_dis } else { 0.0 },
        q_per_a: sim.charge_per_area(),
        rz: last.map_or(f64::NAN, |r| r.rz),
        ra: last.map_or(f64::NAN, |r| r.ra),
        newton_iterations: stats.newton_iterations,
        max_newton_iterations: stats.max_newton_iterations,
        linear_fallbacks: stats.linear.fallbacks,
        krylov_iterations: stats.linear.krylov_iterations,
        wall_time_s: wall,
    }
}

pub fn write_snapshot(sim: &Simulation, path: &Path, title: &str) -> Result<()> {
    let d = sim.mean_d();
    let state = sim.state();
    write_vtk(path, title, sim.mesh(), &VtkFields { v: &state.v, theta: &state.theta, d: &d })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| EcmError::io(path, e))
}

/// Executes the whole scenario. Writes `config.toml`, `series.csv`,
/// `summary.toml` and VTK snapshots; on a failed step the last good state
/// goes to `checkpoint.vtk`.
pub fn run(config: &ScenarioConfig, out: &Path) -> std::result::Result<RunSummary, RunFailure> {
    let started = Instant::now();
    std::fs::create_dir_all(out).map_err(|e| EcmError::io(out, e))?;
    write_text(&out.join("config.toml"), &config.to_toml_string()?)?;
    let mut sim = Simulation::new(config.setup()?)?;
    let every = config.output.csv_every;
    let vtk_every = config.output.vtk_every;
    if vtk_every > 0 {
        write_snapshot(&sim, &out.join(format!("{}_{:06}.vtk", config.name, 0)), &config.name)?;
    }
    while !sim.finished() {
        if let Err(error) = sim.step() {
            let path = out.join("checkpoint.vtk");
            let checkpoint = write_snapshot(&sim, &path, "last converged state").ok().map(|_| path);
            let records = thin(sim.series().records(), every);
            let _ = write_csv(&out.join("series.csv"), &records);
            return Err(RunFailure { error, checkpoint });
        }
        let n = sim.step_index();
        if vtk_every > 0 && n % vtk_every == 0 {
            write_snapshot(&sim, &out.join(format!("{}_{:06}.vtk", config.name, n)), &config.name)?;
        }
    }
    write_csv(&out.join("series.csv"), &thin(sim.series().records(), every))?;
    if vtk_every == 0 || sim.step_index() % vtk_every != 0 {
        write_snapshot(&sim, &out.join(format!("{}_final.vtk", config.name)), &config.name)?;
    }
    let summary = summarize(&sim, &config.name, started.elapsed().as_secs_f64());
    if summary.cutoff_ratio > CUTOFF_WARNING {
        log::warn!(
            "{}: cut-off volume is {:.2}% of the dissolved volume; reduce the time step",
            config.name,
            100.0 * summary.cutoff_ratio
        );
    }
    let text = toml::to_string_pretty(&summary).map_err(|e| EcmError::Config(e.to_string()))?;
    write_text(&out.join("summary.toml"), &text)?;
    Ok(summary)
}

/// Every `every`-th record plus the last one.
fn thin(records: &[SignatureRecord], every: usize) -> Vec<SignatureRecord> {
    let n = records.len();
    records
        .iter()
        .enumerate()
        .filter(|(i, _)| (i + 1) % every == 0 || i + 1 == n)
        .map(|(_, r)| *r)
        .collect()
}
