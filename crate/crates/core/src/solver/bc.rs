use crate::error::{EcmError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Potential,
    Temperature,
}

impl Field {
    pub(crate) fn index(self) -> usize {
        match self {
            Field::Potential => 0,
            Field::Temperature => 1,
        }
    }
}

/// Prescribed value as a function of time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeFunction {
    Constant(f64),
    Linear { offset: f64, slope: f64 },
    /// Rises linearly from zero to `v_max` over each period, then drops.
    Sawtooth { v_max: f64, period: f64 },
}

impl TimeFunction {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            TimeFunction::Constant(v) => v,
            TimeFunction::Linear { offset, slope } => offset + slope * t,
            TimeFunction::Sawtooth { v_max, period } => {
                let r = t / period;
                // Guard against t = k·period landing just below the jump.
                let k = (r + 1e-9).floor();
                v_max * (r - k).max(0.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            TimeFunction::Constant(v) => v.is_finite(),
            TimeFunction::Linear { offset, slope } => offset.is_finite() && slope.is_finite(),
            TimeFunction::Sawtooth { v_max, period } => v_max > 0.0 && period > 0.0 && v_max.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(EcmError::Config(format!("invalid boundary schedule {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dirichlet {
    pub name: String,
    pub nodes: Vec<usize>,
    pub field: Field,
    pub value: TimeFunction,
}

/// Marks constrained dofs per field; overlapping sets must agree.
pub fn constrained(bcs: &[Dirichlet], n_nodes: usize) -> Result<[Vec<bool>; 2]> {
    let mut owner: [Vec<Option<usize>>; 2] = [vec![None; n_nodes], vec![None; n_nodes]];
    for (k, bc) in bcs.iter().enumerate() {
        bc.value.validate()?;
        if bc.nodes.is_empty() {
            return Err(EcmError::Config(format!("boundary set '{}' is empty", bc.name)));
        }
        let f = bc.field.index();
        for &n in &bc.nodes {
            if n >= n_nodes {
                return Err(EcmError::Config(format!("boundary set '{}' names node {n} outside the mesh", bc.name)));
            }
            match owner[f][n] {
                Some(j) if bcs[j].value != bc.value => {
                    return Err(EcmError::Config(format!(
                        "boundary sets '{}' and '{}' prescribe different {:?} values at node {n}",
                        bcs[j].name, bc.name, bc.field
                    )));
                }
                Some(_) => {}
                None => owner[f][n] = Some(k),
            }
        }
    }
    Ok(owner.map(|o| o.into_iter().map(|x| x.is_some()).collect()))
}

pub fn apply(bcs: &[Dirichlet], t: f64, v: &mut [f64], theta: &mut [f64]) {
    for bc in bcs {
        let value = bc.value.at(t);
        let target = match bc.field {
            Field::Potential => &mut *v,
            Field::Temperature => &mut *theta,
        };
        for &n in &bc.nodes {
            target[n] = value;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sawtooth_shape() {
        let s = TimeFunction::Sawtooth { v_max: 20.0, period: 4e-3 };
        assert_eq!(s.at(0.0), 0.0);
        assert!((s.at(2e-3) - 10.0).abs() < 1e-9);
        assert!(s.at(4e-3).abs() < 1e-6);
        // 400 steps of 1e-5 land on the drop, not just before it
        assert!(s.at(400.0 * 1e-5).abs() < 1e-6);
        assert!((s.at(399.0 * 1e-5) - 19.95).abs() < 1e-6);
    }

    #[test]
    fn contradictory_overlap_is_rejected() {
        let a = Dirichlet { name: "a".into(), nodes: vec![0, 1], field: Field::Potential, value: TimeFunction::Constant(1.0) };
        let mut b = Dirichlet { name: "b".into(), nodes: vec![1, 2], field: Field::Potential, value: TimeFunction::Constant(0.0) };
        assert!(constrained(&[a.clone(), b.clone()], 3).is_err());
        b.field = Field::Temperature;
        let [fv, ft] = constrained(&[a.clone(), b.clone()], 3).unwrap();
        assert_eq!(fv, [true, true, false]);
        assert_eq!(ft, [false, true, true]);
        b.field = Field::Potential;
        b.value = TimeFunction::Constant(1.0);
        assert!(constrained(&[a, b], 3).is_ok());
    }
}
