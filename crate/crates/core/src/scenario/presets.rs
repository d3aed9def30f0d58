//! The four reference set-ups. Every value can be overridden.

use crate::error::{EcmError, Result};
use crate::geometry::{CurvedSpecimen, GapStrip, GeometrySpec, MeshSpec, RoughSurface, Specimen};
use crate::materials::PolyParam;
use crate::scenario::config::{
    DissolutionSpec, ElectricSpec, MaterialSpec, OutputSpec, ParamOverrides, ScenarioConfig, Schedule, SolverSpec,
    ThermalSpec, TimeSpec,
};
use crate::solver::LinearStrategy;

pub const PRESETS: [&str; 4] = ["ex1", "ex2", "ex3", "ex4"];

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "ex1" => Ok(ex1()),
        "ex2" => Ok(ex2()),
        "ex3" => Ok(ex3()),
        "ex4" => Ok(ex4()),
        other => Err(EcmError::Config(format!("unknown preset '{other}', expected one of {PRESETS:?}"))),
    }
}

/// Stationary dissolution of a square block against a feeding tool.
fn ex1() -> ScenarioConfig {
    ScenarioConfig {
        name: "ex1".into(),
        geometry: GeometrySpec::GapStrip(GapStrip { l: 1e-3, s: 3.2e-4, g: 1e-4 }),
        mesh: MeshSpec::uniform(80),
        time: TimeSpec { dt: 0.01, t_end: 60.0 },
        electric: ElectricSpec {
            anode: Schedule::Constant { value: 20.0 },
            cathode: Schedule::FeedRamp { feed_rate: 1e-5 },
            polarization: 0.0,
        },
        thermal: ThermalSpec::Uniform { value: 323.15, heat_source: 0.0 },
        material: MaterialSpec {
            metal: ParamOverrides { v_eff: Some(1e-11), ..Default::default() },
            electrolyte: ParamOverrides { k_e: Some(PolyParam::constant(16.0)), ..Default::default() },
            ..Default::default()
        },
        solver: SolverSpec::default(),
        dissolution: DissolutionSpec::default(),
        output: OutputSpec { csv_every: 100, vtk_every: 0 },
    }
}

fn specimen_common(name: &str, geometry: GeometrySpec, refined_fraction: f64, t_end: f64) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        geometry,
        mesh: MeshSpec { divisions: 72, coarsening: 1, refined_fraction, ..MeshSpec::uniform(72) },
        time: TimeSpec { dt: 0.01, t_end },
        electric: ElectricSpec {
            anode: Schedule::Constant { value: 15.0 },
            // 1 mm/min
            cathode: Schedule::FeedRamp { feed_rate: 1e-3 / 60.0 },
            polarization: 3.0,
        },
        thermal: ThermalSpec::InflowOutflow { inflow: 298.15, outflow: 308.15, heat_source: 0.0 },
        material: MaterialSpec::default(),
        solver: SolverSpec { linear: LinearStrategy::BlockGmres, ..Default::default() },
        dissolution: DissolutionSpec::default(),
        output: OutputSpec { csv_every: 100, vtk_every: 0 },
    }
}

/// Planar specimen with heated electrolyte.
fn ex2() -> ScenarioConfig {
    let geometry = GeometrySpec::Planar(Specimen { l: 7e-3, s: 3.6e-4, g: 1e-4, depth: 7e-3 });
    specimen_common("ex2", geometry, 0.25, 100.0)
}

/// Curved specimen with an elevation at the inflow edge.
fn ex3() -> ScenarioConfig {
    let geometry = GeometrySpec::Curved(CurvedSpecimen {
        l: 7e-3,
        s: 3.6e-4,
        g: 1e-4,
        depth: 7e-3,
        x1: 0.5e-3,
        x2: 3e-3,
        y1: 0.25e-3,
        y2: 0.5e-3,
        vertex: [1.5e-3, 0.3e-3],
    });
    specimen_common("ex3", geometry, 0.4, 125.0)
}

/// Pulsed machining of an idealized rough surface.
fn ex4() -> ScenarioConfig {
    ScenarioConfig {
        name: "ex4".into(),
        geometry: GeometrySpec::Rough(RoughSurface {
            w: 20e-6,
            s: 51.875e-6,
            h: 21.875e-6,
            p: 6.25e-6,
            r: 0.625e-6,
            x1: 2.5e-6,
            y1: 5e-6,
            g: 1e-6,
            spikes: 2,
        }),
        mesh: MeshSpec::uniform(128),
        time: TimeSpec { dt: 1e-5, t_end: 0.04 },
        electric: ElectricSpec {
            anode: Schedule::Sawtooth { v_max: 20.0, period: 4e-3 },
            cathode: Schedule::Constant { value: 0.0 },
            polarization: 0.0,
        },
        thermal: ThermalSpec::Uniform { value: 298.15, heat_source: 0.0 },
        material: MaterialSpec::default(),
        solver: SolverSpec::default(),
        dissolution: DissolutionSpec::default(),
        output: OutputSpec { csv_every: 10, vtk_every: 0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml_string().unwrap();
            let back = ScenarioConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
        assert!(preset("ex5").is_err());
    }

    #[test]
    fn ex1_values() {
        let cfg = preset("ex1").unwrap();
        let table = cfg.material.table().unwrap();
        assert_eq!(table.electrolyte.k_e.at(323.15), 16.0);
        assert_eq!(table.metal_v_eff(), 1e-11);
        assert_eq!(cfg.gap(), 3.2e-4);
        assert_eq!(cfg.thermal, ThermalSpec::Uniform { value: 323.15, heat_source: 0.0 });
    }

    #[test]
    fn ex4_values() {
        let cfg = preset("ex4").unwrap();
        assert_eq!(cfg.gap(), 51.875e-6);
        assert_eq!(cfg.time.dt, 1e-5);
        assert_eq!(cfg.electric.anode, Schedule::Sawtooth { v_max: 20.0, period: 4e-3 });
    }
}
