use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::OptimizeError;
use crate::graphon::{DensityFunctional, StepGraphon};
use crate::scalar::Scalar;

/// Largest number of simultaneous constraints.
pub const MAX_CONSTRAINTS: usize = 6;

/// Quantity pinned by a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Functional {
    Density(DensityFunctional),
    /// `t₁ − t₂ − 1/6`, the first forcing functional of the triangle graphon.
    Zeta1,
}

impl Functional {
    pub fn evaluate<T: Scalar>(&self, g: &StepGraphon<T>) -> T {
        match self {
            Functional::Density(f) => g.density(*f),
            Functional::Zeta1 => g.edge_density() - g.star_density(2) - T::one() / T::int(6),
        }
    }

    fn target_range(&self) -> (f64, f64) {
        match self {
            Functional::Density(_) => (0.0, 1.0),
            Functional::Zeta1 => (-7.0 / 6.0, 1.0 / 12.0),
        }
    }
}

impl From<DensityFunctional> for Functional {
    fn from(f: DensityFunctional) -> Self {
        Functional::Density(f)
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Density(d) => d.fmt(f),
            Functional::Zeta1 => write!(f, "zeta1"),
        }
    }
}

impl FromStr for Functional {
    type Err = OptimizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "zeta1" => Ok(Functional::Zeta1),
            "zeta2" => Ok(Functional::Density(DensityFunctional::SignedQuad)),
            other => other
                .parse::<DensityFunctional>()
                .map(Functional::Density)
                .map_err(|e| OptimizeError::Constraints(e.to_string())),
        }
    }
}

impl Serialize for Functional {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Functional {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub functional: Functional,
    pub target: f64,
}

/// Equality constraints `functional(g) = target` of the microcanonical problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Constraint>", into = "Vec<Constraint>")]
pub struct ConstraintSet {
    items: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(items: Vec<Constraint>) -> Result<Self, OptimizeError> {
        if items.is_empty() {
            return Err(OptimizeError::Constraints("at least one constraint is required".into()));
        }
        if items.len() > MAX_CONSTRAINTS {
            return Err(OptimizeError::Constraints(format!(
                "at most {MAX_CONSTRAINTS} constraints are supported, got {}",
                items.len()
            )));
        }
        for (i, a) in items.iter().enumerate() {
            let (lo, hi) = a.functional.target_range();
            if !(a.target >= lo && a.target <= hi) {
                return Err(OptimizeError::Constraints(format!(
                    "target {} = {} outside [{lo}, {hi}]",
                    a.functional, a.target
                )));
            }
            if items[..i].iter().any(|b| b.functional == a.functional) {
                return Err(OptimizeError::Constraints(format!("duplicate constraint on {}", a.functional)));
            }
        }
        Ok(Self { items })
    }

    /// Edge and k-star targets.
    pub fn edge_star(eps: f64, k: u32, tau: f64) -> Result<Self, OptimizeError> {
        let star = DensityFunctional::kstar(k).map_err(|e| OptimizeError::Constraints(e.to_string()))?;
        Self::new(vec![
            Constraint { functional: DensityFunctional::Edge.into(), target: eps },
            Constraint { functional: star.into(), target: tau },
        ])
    }

    pub fn items(&self) -> &[Constraint] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn target(&self, functional: Functional) -> Option<f64> {
        self.items.iter().find(|c| c.functional == functional).map(|c| c.target)
    }

    /// `(ε, k, τ)` when the set is exactly an edge constraint plus one k-star.
    pub fn as_edge_star(&self) -> Option<(f64, u32, f64)> {
        if self.items.len() != 2 {
            return None;
        }
        let eps = self.target(DensityFunctional::Edge.into())?;
        self.items.iter().find_map(|c| match c.functional {
            Functional::Density(DensityFunctional::KStar(k)) => Some((eps, k, c.target)),
            _ => None,
        })
    }

    /// `functional(g) − target` for every constraint.
    pub fn violations(&self, g: &StepGraphon<f64>) -> Vec<f64> {
        self.items.iter().map(|c| c.functional.evaluate(g) - c.target).collect()
    }
}

impl TryFrom<Vec<Constraint>> for ConstraintSet {
    type Error = OptimizeError;

    fn try_from(items: Vec<Constraint>) -> Result<Self, Self::Error> {
        Self::new(items)
    }
}

impl From<ConstraintSet> for Vec<Constraint> {
    fn from(cs: ConstraintSet) -> Self {
        cs.items
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}={}", c.functional, c.target)?;
        }
        Ok(())
    }
}

/// Parses `"t1=0.5,t2=0.28"`.
impl FromStr for ConstraintSet {
    type Err = OptimizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let items = s
            .split(',')
            .filter(|part| !part.trim().is_empty())
            .map(|part| {
                let (name, value) = part
                    .split_once('=')
                    .ok_or_else(|| OptimizeError::Constraints(format!("expected name=value, got `{part}`")))?;
                let target = value
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| OptimizeError::Constraints(format!("bad target `{value}`: {e}")))?;
                Ok(Constraint { functional: name.parse()?, target })
            })
            .collect::<Result<Vec<_>, OptimizeError>>()?;
        Self::new(items)
    }
}
