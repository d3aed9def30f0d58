//! Transient electro-thermal finite element model of anodic dissolution in
//! electrochemical machining.
//!
//! The mesh never changes. Each integration point carries a dissolution
//! level `d ∈ [0, 1]` that blends metal and electrolyte properties, and a
//! Faraday-type update moves `d` with the local current. Potential and
//! temperature are solved fully coupled, including Seebeck, Peltier and
//! Joule effects, with Newton's method in every time step.
//!
//! ```no_run
//! use ecm_core::scenario::preset;
//! use ecm_core::Simulation;
//!
//! let cfg = preset("ex1")?.with_overrides(&["mesh.divisions=10", "time.t_end=1.0"])?;
//! let mut sim = Simulation::new(cfg.setup()?)?;
//! sim.run()?;
//! println!("dissolved volume {:e} m³", sim.dissolved_volume());
//! # Ok::<(), ecm_core::EcmError>(())
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dissolution;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod materials;
pub mod postprocess;
pub mod runner;
pub mod scenario;
pub mod solver;

pub use dissolution::{CutoffLedger, IpState};
pub use error::{EcmError, Result};
pub use geometry::{Mesh, Region, UnitCellGeom};
pub use materials::MaterialTable;
pub use postprocess::{RoughnessProfile, SignatureRecord, SignatureSeries};
pub use runner::{run, RunFailure, RunSummary};
pub use scenario::{load_config, preset, ScenarioConfig};
pub use solver::{Simulation, SimulationSetup};
