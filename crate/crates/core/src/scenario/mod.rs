//! Scenario configuration and its translation into a simulation set-up.

pub mod config;
pub mod presets;

pub use config::{load_config, ScenarioConfig, Schedule, ThermalSpec};
pub use presets::{preset, PRESETS};

use crate::error::Result;
use crate::geometry::{build_scenario_mesh, GeometrySpec};
use crate::postprocess::SurfaceAxes;
use crate::solver::{Dirichlet, Field, NewtonSettings, SimulationSetup, TimeFunction};

impl ScenarioConfig {
    /// Builds the mesh, the material table and the boundary data.
    pub fn setup(&self) -> Result<SimulationSetup> {
        self.validate()?;
        let mesh = build_scenario_mesh(&self.geometry, &self.mesh)?;
        let materials = self.material.table()?;
        let e = &self.electric;
        let anode = match e.anode {
            Schedule::Constant { value } => TimeFunction::Constant(value - e.polarization),
            Schedule::Sawtooth { v_max, period } => TimeFunction::Sawtooth { v_max, period },
            Schedule::FeedRamp { .. } => unreachable!("rejected by validate"),
        };
        let cathode = match e.cathode {
            Schedule::Constant { value } => TimeFunction::Constant(value),
            Schedule::Sawtooth { v_max, period } => TimeFunction::Sawtooth { v_max, period },
            Schedule::FeedRamp { feed_rate } => {
                let TimeFunction::Constant(v_an) = anode else { unreachable!("rejected by validate") };
                TimeFunction::Linear { offset: 0.0, slope: -v_an * feed_rate / self.gap() }
            }
        };
        let set = |name: &str| -> Result<Vec<usize>> { Ok(mesh.node_set(name)?.to_vec()) };
        let mut dirichlet = vec![
            Dirichlet { name: "anode".into(), nodes: set("anode")?, field: Field::Potential, value: anode },
            Dirichlet { name: "cathode".into(), nodes: set("cathode")?, field: Field::Potential, value: cathode },
        ];
        let initial_temperature = match self.thermal {
            ThermalSpec::Uniform { value, .. } => {
                dirichlet.push(Dirichlet {
                    name: "all".into(),
                    nodes: (0..mesh.n_nodes()).collect(),
                    field: Field::Temperature,
                    value: TimeFunction::Constant(value),
                });
                value
            }
            ThermalSpec::InflowOutflow { inflow, outflow, .. } => {
                for (name, value) in [("inflow", inflow), ("outflow", outflow)] {
                    dirichlet.push(Dirichlet {
                        name: name.into(),
                        nodes: set(name)?,
                        field: Field::Temperature,
                        value: TimeFunction::Constant(value),
                    });
                }
                inflow
            }
        };
        let axes = match self.geometry {
            GeometrySpec::GapStrip(_) => SurfaceAxes::X_UP,
            _ => SurfaceAxes::Y_UP,
        };
        let s = &self.solver;
        Ok(SimulationSetup {
            mesh,
            materials,
            dt: self.time.dt,
            t_end: self.time.t_end,
            dirichlet,
            initial_temperature,
            heat_source: self.thermal.heat_source(),
            newton: NewtonSettings { tol_rel: s.tol_rel, tol_abs: s.tol_abs, max_iter: s.max_iter },
            linear: s.linear,
            krylov_tol: s.krylov_tol,
            dissolved_threshold: self.dissolution.dissolved_threshold,
            axes,
            anode_set: Some("anode".into()),
        })
    }
}
