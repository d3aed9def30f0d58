//! Scenario files: TOML with nested sections, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EcmError, Result};
use crate::geometry::{GeometrySpec, MeshSpec};
use crate::materials::{MaterialTable, PolyParam};
use crate::solver::LinearStrategy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub geometry: GeometrySpec,
    pub mesh: MeshSpec,
    pub time: TimeSpec,
    pub electric: ElectricSpec,
    pub thermal: ThermalSpec,
    #[serde(default)]
    pub material: MaterialSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub dissolution: DissolutionSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricSpec {
    pub anode: Schedule,
    pub cathode: Schedule,
    /// Polarization voltage, subtracted from the anode value.
    #[serde(default)]
    pub polarization: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant { value: f64 },
    /// `−(ṽ_an ẋ_ca / s) t`: emulates the tool feed without moving the mesh.
    FeedRamp { feed_rate: f64 },
    /// Linear rise from 0 to `v_max` in every period.
    Sawtooth { v_max: f64, period: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThermalSpec {
    /// Temperature held at `value` everywhere.
    Uniform {
        value: f64,
        #[serde(default)]
        heat_source: f64,
    },
    /// Side strips held at the inflow and outflow temperatures; the rest
    /// starts at the inflow temperature.
    InflowOutflow {
        inflow: f64,
        outflow: f64,
        #[serde(default)]
        heat_source: f64,
    },
}

impl ThermalSpec {
    pub fn heat_source(&self) -> f64 {
        match *self {
            ThermalSpec::Uniform { heat_source, .. } | ThermalSpec::InflowOutflow { heat_source, .. } => heat_source,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_theta: Option<PolyParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_e: Option<PolyParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_theta: Option<PolyParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_v: Option<PolyParam>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_r: Option<f64>,
    /// Metal only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_eff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    #[serde(default = "default_base")]
    pub base: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_temperature: Option<f64>,
    #[serde(default)]
    pub metal: ParamOverrides,
    #[serde(default)]
    pub electrolyte: ParamOverrides,
}

fn default_base() -> String {
    "steel_42crmo4_nano3".into()
}

impl Default for MaterialSpec {
    fn default() -> Self {
        Self {
            base: default_base(),
            efficiency: None,
            reference_temperature: None,
            metal: ParamOverrides::default(),
            electrolyte: ParamOverrides::default(),
        }
    }
}

impl MaterialSpec {
    pub fn table(&self) -> Result<MaterialTable> {
        let mut t = match self.base.as_str() {
            "steel_42crmo4_nano3" => MaterialTable::steel_42crmo4_nano3(),
            other => return Err(EcmError::Config(format!("unknown material base '{other}'"))),
        };
        if let Some(e) = self.efficiency {
            t.efficiency = e;
        }
        if let Some(r) = self.reference_temperature {
            t.reference_temperature = r;
        }
        if self.electrolyte.v_eff.is_some() {
            return Err(EcmError::Config("material.electrolyte.v_eff is not a valid key".into()));
        }
        for phase in &mut t.phases {
            let m = &self.metal;
            let p = &mut phase.params;
            apply_overrides(m, &mut p.c_theta, &mut p.k_e, &mut p.k_theta, &mut p.rho_v, &mut p.alpha, &mut p.eps_r);
            if let Some(v) = m.v_eff {
                phase.v_eff = v;
            }
        }
        let e = &mut t.electrolyte;
        let o = &self.electrolyte;
        apply_overrides(o, &mut e.c_theta, &mut e.k_e, &mut e.k_theta, &mut e.rho_v, &mut e.alpha, &mut e.eps_r);
        t.validate().map_err(|e| EcmError::Config(e.to_string()))?;
        Ok(t)
    }
}

fn apply_overrides(
    o: &ParamOverrides,
    c_theta: &mut PolyParam,
    k_e: &mut PolyParam,
    k_theta: &mut PolyParam,
    rho_v: &mut PolyParam,
    alpha: &mut f64,
    eps_r: &mut f64,
) {
    for (src, dst) in [(&o.c_theta, c_theta), (&o.k_e, k_e), (&o.k_theta, k_theta), (&o.rho_v, rho_v)] {
        if let Some(v) = src {
            *dst = *v;
        }
    }
    if let Some(a) = o.alpha {
        *alpha = a;
    }
    if let Some(e) = o.eps_r {
        *eps_r = e;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "d_tol_rel")]
    pub tol_rel: f64,
    #[serde(default)]
    pub tol_abs: f64,
    #[serde(default = "d_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub linear: LinearStrategy,
    #[serde(default = "d_krylov")]
    pub krylov_tol: f64,
}

fn d_tol_rel() -> f64 {
    1e-8
}
fn d_max_iter() -> usize {
    25
}
fn d_krylov() -> f64 {
    1e-12
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tol_rel: d_tol_rel(), tol_abs: 0.0, max_iter: d_max_iter(), linear: LinearStrategy::Auto, krylov_tol: d_krylov() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissolutionSpec {
    #[serde(default = "d_threshold")]
    pub dissolved_threshold: f64,
}

fn d_threshold() -> f64 {
    0.999
}

impl Default for DissolutionSpec {
    fn default() -> Self {
        Self { dissolved_threshold: d_threshold() }
    }
}

/// Output cadence in steps; `vtk_every = 0` writes only the final snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "d_one")]
    pub csv_every: usize,
    #[serde(default)]
    pub vtk_every: usize,
}

fn d_one() -> usize {
    1
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { csv_every: 1, vtk_every: 0 }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| EcmError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| EcmError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EcmError::Config(msg));
        let TimeSpec { dt, t_end } = self.time;
        if !(dt > 0.0) || !dt.is_finite() {
            return bad(format!("time.dt must be positive, got {dt}"));
        }
        if !(t_end >= dt) || !t_end.is_finite() {
            return bad(format!("time.t_end = {t_end} must be at least time.dt = {dt}"));
        }
        for s in [&self.electric.anode, &self.electric.cathode] {
            match *s {
                Schedule::Sawtooth { v_max, period } if !(v_max > 0.0 && period > 0.0) => {
                    return bad(format!("sawtooth needs v_max > 0 and period > 0, got {v_max}, {period}"));
                }
                Schedule::FeedRamp { feed_rate } if !(feed_rate > 0.0) => {
                    return bad(format!("feed_rate must be positive, got {feed_rate}"));
                }
                Schedule::Constant { value } if !value.is_finite() => return bad("potential must be finite".into()),
                _ => {}
            }
        }
        if matches!(self.electric.anode, Schedule::FeedRamp { .. }) {
            return bad("the feed ramp applies to the cathode only".into());
        }
        if matches!(self.electric.cathode, Schedule::FeedRamp { .. })
            && !matches!(self.electric.anode, Schedule::Constant { .. })
        {
            return bad("a cathode feed ramp needs a constant anode potential".into());
        }
        if self.electric.polarization != 0.0 && !matches!(self.electric.anode, Schedule::Constant { .. }) {
            return bad("polarization is only supported with a constant anode potential".into());
        }
        let temps = match self.thermal {
            ThermalSpec::Uniform { value, .. } => vec![value],
            ThermalSpec::InflowOutflow { inflow, outflow, .. } => vec![inflow, outflow],
        };
        if temps.iter().any(|t| !(*t > 0.0)) || !self.thermal.heat_source().is_finite() {
            return bad("temperatures must be positive and the heat source finite".into());
        }
        if let (ThermalSpec::InflowOutflow { .. }, GeometrySpec::GapStrip(_) | GeometrySpec::Rough(_)) =
            (&self.thermal, &self.geometry)
        {
            return bad("inflow/outflow temperatures need a planar or curved specimen".into());
        }
        if self.mesh.divisions == 0 {
            return bad("mesh.divisions must be positive".into());
        }
        let th = self.dissolution.dissolved_threshold;
        if !(th > 0.0 && th <= 1.0) {
            return bad(format!("dissolution.dissolved_threshold {th} outside (0, 1]"));
        }
        if self.output.csv_every == 0 {
            return bad("output.csv_every must be at least 1".into());
        }
        let s = &self.solver;
        if !(s.tol_rel >= 0.0 && s.tol_abs >= 0.0) || s.tol_rel + s.tol_abs == 0.0 || s.max_iter == 0 {
            return bad("solver tolerances must be non-negative, not both zero, and max_iter positive".into());
        }
        if !(s.krylov_tol > 0.0 && s.krylov_tol < 1.0) {
            return bad(format!("solver.krylov_tol {} outside (0, 1)", s.krylov_tol));
        }
        self.material.table()?;
        Ok(())
    }

    /// Gap width `s` of the geometry.
    pub fn gap(&self) -> f64 {
        match &self.geometry {
            GeometrySpec::GapStrip(g) => g.s,
            GeometrySpec::Planar(p) => p.s,
            GeometrySpec::Curved(c) => c.s,
            GeometrySpec::Rough(r) => r.s,
        }
    }

    /// Returns a copy with `key=value` assignments applied; keys are dotted
    /// paths, values TOML literals (bare words are taken as strings).
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut root = toml::Value::try_from(self).map_err(|e| EcmError::Config(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| EcmError::Config(format!("override '{o}' is not of the form key=value")))?;
            set_path(&mut root, key.trim(), parse_literal(raw.trim()))?;
        }
        let cfg: ScenarioConfig = root.try_into().map_err(|e: toml::de::Error| EcmError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(EcmError::Config(format!("malformed override key '{key}'")));
    }
    let mut node = root;
    for p in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| EcmError::Config(format!("override key '{key}': '{p}' is not a section")))?;
        node = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| EcmError::Config(format!("override key '{key}' does not name a section entry")))?;
    let last = parts[parts.len() - 1];
    // Integers given for float fields are accepted by widening.
    let value = match (table.get(last), value) {
        (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    };
    table.insert(last.to_string(), value);
    Ok(())
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| EcmError::io(path, e))?;
    ScenarioConfig::from_toml_str(&text).map_err(|e| match e {
        EcmError::Config(msg) => EcmError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
