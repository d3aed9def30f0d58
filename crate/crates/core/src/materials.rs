//! Temperature-dependent material parameters and Faraday constants.
//!
//! Every parameter is a cubic in the absolute temperature θ (kelvin).
//! Effective values inside a partially dissolved unit cell are a linear
//! blend between the metal phases and the electrolyte:
//!
//! ```text
//! p̄ = (1 − d) Σ_a λ_a p_a + d p_EL
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{EcmError, Result};

pub const FARADAY: f64 = 96485.0;
pub const EPSILON_0: f64 = 8.854e-12;
pub const REFERENCE_TEMPERATURE: f64 = 298.15;

/// Range over which conductivities and capacities must stay positive.
pub const VALID_RANGE: (f64, f64) = (273.15, 373.15);

/// Cubic `c0 + c1 θ + c2 θ² + c3 θ³`. Serialized as an array of 1 to 4 coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolyParam {
    pub c: [f64; 4],
}

impl PolyParam {
    pub fn new(c: [f64; 4]) -> Result<Self> {
        if c.iter().any(|x| !x.is_finite()) {
            return Err(EcmError::InvalidInput(format!("non-finite polynomial coefficient in {c:?}")));
        }
        Ok(Self { c })
    }

    pub const fn constant(c0: f64) -> Self {
        Self { c: [c0, 0.0, 0.0, 0.0] }
    }

    #[inline]
    pub fn at(&self, theta: f64) -> f64 {
        let c = &self.c;
        c[0] + theta * (c[1] + theta * (c[2] + theta * c[3]))
    }

    /// Smallest value on a dense sampling of `range`.
    pub fn min_over(&self, range: (f64, f64)) -> f64 {
        let n = 200;
        (0..=n)
            .map(|i| self.at(range.0 + (range.1 - range.0) * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<f64>> for PolyParam {
    type Error = String;

    fn try_from(v: Vec<f64>) -> std::result::Result<Self, String> {
        if v.is_empty() || v.len() > 4 {
            return Err(format!("expected 1 to 4 polynomial coefficients, got {}", v.len()));
        }
        let mut c = [0.0; 4];
        c[..v.len()].copy_from_slice(&v);
        PolyParam::new(c).map_err(|e| e.to_string())
    }
}

impl From<PolyParam> for Vec<f64> {
    fn from(p: PolyParam) -> Self {
        let len = p.c.iter().rposition(|&x| x != 0.0).map_or(1, |i| i + 1);
        p.c[..len].to_vec()
    }
}

pub fn eval_param(poly: &PolyParam, theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(EcmError::InvalidInput(format!("temperature {theta} is not finite")));
    }
    Ok(poly.at(theta))
}

/// Linear blend of the metal mixture and the electrolyte value at dissolution level `d`.
pub fn effective_param(d: f64, metal_values: &[f64], fractions: &[f64], electrolyte_value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d) {
        return Err(EcmError::Invariant(format!("dissolution level {d} outside [0, 1]")));
    }
    if metal_values.len() != fractions.len() {
        return Err(EcmError::InvalidInput(format!(
            "{} phase values but {} volume fractions",
            metal_values.len(),
            fractions.len()
        )));
    }
    Ok(mix(d, metal_mixture(metal_values, fractions), electrolyte_value))
}

#[inline]
pub(crate) fn mix(d: f64, metal: f64, electrolyte: f64) -> f64 {
    (1.0 - d) * metal + d * electrolyte
}

fn metal_mixture(values: &[f64], fractions: &[f64]) -> f64 {
    values.iter().zip(fractions).map(|(v, l)| v * l).sum()
}

pub fn peltier_coeff(alpha: f64, theta: f64) -> f64 {
    alpha * theta
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reaction {
    pub probability: f64,
    pub valency: f64,
}

/// Parameters shared by metal phases and the electrolyte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoElectric {
    /// Specific heat capacity, J/(kg K).
    pub c_theta: PolyParam,
    /// Electric conductivity, A/(V m).
    pub k_e: PolyParam,
    /// Thermal conductivity, W/(m K).
    pub k_theta: PolyParam,
    /// Mass density, kg/m³.
    pub rho_v: PolyParam,
    /// Seebeck coefficient, V/K.
    pub alpha: f64,
    pub eps_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub name: String,
    pub volume_fraction: f64,
    /// kg/mol
    pub molar_mass: f64,
    pub reactions: Vec<Reaction>,
    pub params: ThermoElectric,
    /// Effective dissolved volume per charge, m³/(A s).
    pub v_eff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialTable {
    pub phases: Vec<PhaseSpec>,
    pub electrolyte: ThermoElectric,
    pub efficiency: f64,
    pub faraday_constant: f64,
    pub electric_constant: f64,
    /// Temperature at which ρ_V enters Faraday's law.
    pub reference_temperature: f64,
}

/// Pointwise material values at one temperature.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointValues {
    pub c_theta: f64,
    pub k_e: f64,
    pub k_theta: f64,
    pub rho_v: f64,
    pub alpha: f64,
    pub eps_r: f64,
}

impl PointValues {
    fn of(p: &ThermoElectric, theta: f64) -> Self {
        Self {
            c_theta: p.c_theta.at(theta),
            k_e: p.k_e.at(theta),
            k_theta: p.k_theta.at(theta),
            rho_v: p.rho_v.at(theta),
            alpha: p.alpha,
            eps_r: p.eps_r,
        }
    }

    fn blend(d: f64, m: &Self, e: &Self) -> Self {
        Self {
            c_theta: mix(d, m.c_theta, e.c_theta),
            k_e: mix(d, m.k_e, e.k_e),
            k_theta: mix(d, m.k_theta, e.k_theta),
            rho_v: mix(d, m.rho_v, e.rho_v),
            alpha: mix(d, m.alpha, e.alpha),
            eps_r: mix(d, m.eps_r, e.eps_r),
        }
    }
}

impl MaterialTable {
    /// 42CrMo4 in aqueous NaNO3 with the cubic fits of the reference data set.
    pub fn steel_42crmo4_nano3() -> Self {
        let metal = ThermoElectric {
            c_theta: PolyParam { c: [3.554e2, 2.848e-1, -5.000e-5, 0.0] },
            k_e: PolyParam { c: [1.131e7, -3.710e4, 6.020e1, -3.994e-2] },
            k_theta: PolyParam { c: [3.651e1, 4.899e-2, -1.012e-4, 4.654e-8] },
            rho_v: PolyParam { c: [7.849e2, -6.289e-2, -4.167e-4, 1.907e-7] },
            alpha: 5e-6,
            eps_r: 80.0,
        };
        let electrolyte = ThermoElectric {
            c_theta: PolyParam { c: [8.145e3, -3.204e1, 8.371e-2, -6.979e-5] },
            k_e: PolyParam { c: [-6.302e1, 2.530e-1, 0.0, 0.0] },
            k_theta: PolyParam { c: [-8.691e-1, 8.949e-3, -1.584e-5, 7.975e-9] },
            rho_v: PolyParam { c: [8.385e2, 1.401, 3.011e-3, 3.718e-7] },
            alpha: 1e-6,
            eps_r: 1.0,
        };
        Self {
            phases: vec![PhaseSpec {
                name: "42CrMo4".into(),
                volume_fraction: 1.0,
                molar_mass: 55.845e-3,
                reactions: vec![Reaction { probability: 1.0, valency: 2.0 }],
                params: metal,
                v_eff: 3.65e-11,
            }],
            electrolyte,
            efficiency: 1.0,
            faraday_constant: FARADAY,
            electric_constant: EPSILON_0,
            reference_temperature: REFERENCE_TEMPERATURE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(EcmError::InvalidInput("material table has no metal phase".into()));
        }
        let total: f64 = self.phases.iter().map(|p| p.volume_fraction).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(EcmError::InvalidInput(format!("phase volume fractions sum to {total}, expected 1")));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(EcmError::InvalidInput(format!("efficiency {} outside (0, 1]", self.efficiency)));
        }
        for p in &self.phases {
            if !(0.0..=1.0).contains(&p.volume_fraction) {
                return Err(EcmError::InvalidInput(format!("phase {}: volume fraction outside [0, 1]", p.name)));
            }
            if !(p.v_eff > 0.0) {
                return Err(EcmError::InvalidInput(format!("phase {}: v_eff must be positive", p.name)));
            }
            check_positive(&p.name, &p.params)?;
        }
        check_positive("electrolyte", &self.electrolyte)
    }

    pub fn metal_at(&self, theta: f64) -> PointValues {
        if let [only] = self.phases.as_slice() {
            return PointValues::of(&only.params, theta);
        }
        let mut acc = PointValues::default();
        for p in &self.phases {
            let v = PointValues::of(&p.params, theta);
            let l = p.volume_fraction;
            acc.c_theta += l * v.c_theta;
            acc.k_e += l * v.k_e;
            acc.k_theta += l * v.k_theta;
            acc.rho_v += l * v.rho_v;
            acc.alpha += l * v.alpha;
            acc.eps_r += l * v.eps_r;
        }
        acc
    }

    pub fn electrolyte_at(&self, theta: f64) -> PointValues {
        PointValues::of(&self.electrolyte, theta)
    }

    /// Mixed values at dissolution level `d` and temperature `theta`.
    pub fn effective_at(&self, d: f64, theta: f64) -> PointValues {
        PointValues::blend(d, &self.metal_at(theta), &self.electrolyte_at(theta))
    }

    pub fn metal_v_eff(&self) -> f64 {
        self.phases.iter().map(|p| p.volume_fraction * p.v_eff).sum()
    }
}

fn check_positive(name: &str, p: &ThermoElectric) -> Result<()> {
    for (what, poly) in [("c_theta", &p.c_theta), ("k_e", &p.k_e), ("k_theta", &p.k_theta), ("rho_v", &p.rho_v)] {
        let m = poly.min_over(VALID_RANGE);
        if !(m > 0.0) {
            return Err(EcmError::InvalidInput(format!(
                "{name}: {what} reaches {m:.4e} on [{}, {}] K",
                VALID_RANGE.0, VALID_RANGE.1
            )));
        }
    }
    if !(p.eps_r > 0.0) || !p.alpha.is_finite() {
        return Err(EcmError::InvalidInput(format!("{name}: eps_r must be positive and alpha finite")));
    }
    Ok(())
}

/// Theoretical dissolved volume per charge from Faraday's law, m³/(A s).
pub fn faraday_specific_volume(table: &MaterialTable) -> Result<f64> {
    let theta = table.reference_temperature;
    let mut v = 0.0;
    for p in &table.phases {
        let charge: f64 = p.reactions.iter().map(|r| r.probability * r.valency).sum();
        if charge == 0.0 {
            return Err(EcmError::InvalidInput(format!("phase {}: zero total valency", p.name)));
        }
        let rho = p.params.rho_v.at(theta);
        v += p.volume_fraction * p.molar_mass / (table.faraday_constant * rho * charge);
    }
    Ok(table.efficiency * v)
}
