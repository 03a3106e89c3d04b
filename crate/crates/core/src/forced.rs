//! Entropy maximization along `g_α = α + (1−2α)·1{x+y>1}`, a path into the
//! finitely forcible half-plane graphon, with podality tracked as `α → 0`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graphon::{discretize_halfplane, DensityFunctional, DensityVector, GraphonError, StepGraphon};
use crate::optimize::{
    maximize_entropy_with, Constraint, ConstraintSet, Functional, OptimizationResult, OptimizeError, OptimizerConfig,
};
use crate::report::{format_float, write_csv};
use crate::scalar::Scalar;

/// Restart count used for forced-model solves.
pub const FORCED_RESTARTS: usize = 48;

#[derive(Debug, Error)]
pub enum ForcedError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Graphon(#[from] GraphonError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForcedMode {
    /// Pin `(t₁, t₂, chain3, cycle4)`.
    FourDensities,
    /// Pin `(ζ₁, ζ₂)`.
    ZetaConstraints,
}

impl fmt::Display for ForcedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForcedMode::FourDensities => "four",
            ForcedMode::ZetaConstraints => "zeta",
        })
    }
}

impl FromStr for ForcedMode {
    type Err = ForcedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "four" => Ok(ForcedMode::FourDensities),
            "zeta" => Ok(ForcedMode::ZetaConstraints),
            other => Err(ForcedError::Domain(format!("unknown forced mode `{other}` (expected four or zeta)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForcedSpec {
    alpha: f64,
    mode: ForcedMode,
}

impl ForcedSpec {
    pub fn new(alpha: f64, mode: ForcedMode) -> Result<Self, ForcedError> {
        if !(0.0..0.5).contains(&alpha) {
            return Err(ForcedError::Domain(format!("alpha must lie in [0, 1/2), got {alpha}")));
        }
        Ok(Self { alpha, mode })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> ForcedMode {
        self.mode
    }

    pub fn constraints(&self) -> Result<ConstraintSet, ForcedError> {
        let items = match self.mode {
            ForcedMode::FourDensities => galpha_densities(self.alpha)?
                .entries
                .into_iter()
                .map(|(f, target)| Constraint { functional: f.into(), target })
                .collect(),
            ForcedMode::ZetaConstraints => {
                let (z1, z2) = zeta_of_alpha(self.alpha)?;
                vec![
                    Constraint { functional: Functional::Zeta1, target: z1 },
                    Constraint { functional: DensityFunctional::SignedQuad.into(), target: z2 },
                ]
            }
        };
        Ok(ConstraintSet::new(items)?)
    }
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<(), ForcedError> {
    if alpha < T::zero() || alpha > T::one() / T::int(2) {
        return Err(ForcedError::Domain(format!("alpha must lie in [0, 1/2], got {alpha}")));
    }
    Ok(())
}

/// `(t₁, t₂, chain3, cycle4)` of `g_α`. Exact for rational `alpha`.
pub fn galpha_densities<T: Scalar>(alpha: T) -> Result<DensityVector<T>, ForcedError> {
    check_alpha(alpha)?;
    let a = alpha;
    let i = T::int;
    let a2 = a * a;
    let t1 = T::one() / i(2);
    let t2 = (T::one() - a + a2) / i(3);
    let chain3 = (i(5) - i(8) * a + i(8) * a2) / i(24);
    let cycle4 = (T::one() - i(3) * a + i(5) * a2 - i(4) * a2 * a + i(2) * a2 * a2) / i(6);
    Ok(DensityVector {
        entries: vec![
            (DensityFunctional::Edge, t1),
            (DensityFunctional::KStar(2), t2),
            (DensityFunctional::Chain3, chain3),
            (DensityFunctional::Cycle4, cycle4),
        ],
    })
}

/// `(ζ₁, ζ₂)` of `g_α` from their closed forms.
pub fn zeta_of_alpha<T: Scalar>(alpha: T) -> Result<(T, T), ForcedError> {
    check_alpha(alpha)?;
    let a = alpha;
    let a2 = a * a;
    let z1 = a * (T::one() - a) / T::int(3);
    let z2 = a * (T::one() + a - T::int(4) * a2 + T::int(2) * a2 * a) / T::int(6);
    Ok((z1, z2))
}

/// `(t₁ − t₂ − 1/6, t_Q)` of any graphon.
pub fn zeta_of_graphon<T: Scalar>(g: &StepGraphon<T>) -> (T, T) {
    (Functional::Zeta1.evaluate(g), g.signed_quad_density())
}

/// `α + (1−2α)·h` with `h` the `n`-block half-plane discretization.
pub fn galpha_graphon<T: Scalar>(alpha: T, n: usize) -> Result<StepGraphon<T>, ForcedError> {
    check_alpha(alpha)?;
    let scale = T::one() - T::int(2) * alpha;
    let h = discretize_halfplane::<T>(n)?;
    let values = h.values().iter().map(|&v| alpha + scale * v).collect();
    Ok(StepGraphon::from_parts_unchecked(h.fractions().to_vec(), values))
}

/// Forced-model configuration: the given settings with at least
/// [`FORCED_RESTARTS`] restarts.
pub fn forced_config(cfg: &OptimizerConfig) -> OptimizerConfig {
    OptimizerConfig { restarts: cfg.restarts.max(FORCED_RESTARTS), ..cfg.clone() }
}

/// Maximizer for `spec` over `K = 1..=cfg.k_max`, seeded additionally with
/// the block discretizations of `g_α`.
pub fn run_forced(spec: ForcedSpec, cfg: &OptimizerConfig) -> Result<OptimizationResult, ForcedError> {
    let cs = spec.constraints()?;
    let seeds = (2..=cfg.k_max.max(2))
        .map(|n| galpha_graphon(spec.alpha, n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(maximize_entropy_with(&cs, cfg, &seeds)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub alpha: f64,
    pub podality: usize,
    pub entropy: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PodalityTrend {
    pub mode: ForcedMode,
    pub rows: Vec<TrendRow>,
    /// Podality never drops as `α` decreases.
    pub monotone: bool,
}

impl PodalityTrend {
    pub const HEADER: [&'static str; 5] = ["mode", "alpha", "podality", "entropy", "max_residual"];

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ForcedError> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    self.mode.to_string(),
                    format_float(r.alpha),
                    r.podality.to_string(),
                    format_float(r.entropy),
                    format_float(r.max_residual),
                ]
            })
            .collect();
        Ok(write_csv(out, &Self::HEADER, &rows)?)
    }
}

/// Podality of the maximizer at each `α`, given in strictly decreasing order.
pub fn podality_trend(alphas: &[f64], mode: ForcedMode, cfg: &OptimizerConfig) -> Result<PodalityTrend, ForcedError> {
    if alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(ForcedError::Domain("alphas must be strictly decreasing".into()));
    }
    let specs = alphas
        .iter()
        .map(|&a| ForcedSpec::new(a, mode))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = specs
        .par_iter()
        .map(|&spec| {
            let r = run_forced(spec, cfg)?;
            Ok(TrendRow {
                alpha: spec.alpha,
                podality: r.podality,
                entropy: r.entropy,
                max_residual: r.residuals.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            })
        })
        .collect::<Result<Vec<_>, ForcedError>>()?;
    let monotone = rows.windows(2).all(|w| w[1].podality >= w[0].podality);
    Ok(PodalityTrend { mode, rows, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn halfplane_point_is_exact() {
        let d = galpha_densities(r(0, 1)).unwrap();
        assert_eq!(d.values(), vec![r(1, 2), r(1, 3), r(5, 24), r(1, 6)]);
        assert_eq!(zeta_of_alpha(r(0, 1)).unwrap(), (r(0, 1), r(0, 1)));
    }

    #[test]
    fn half_gives_constant_graphon() {
        let d = galpha_densities(r(1, 2)).unwrap();
        assert_eq!(d.values(), vec![r(1, 2), r(1, 4), r(1, 8), r(1, 16)]);
    }

    #[test]
    fn zeta_matches_densities_exactly() {
        for a in [r(1, 5), r(1, 7), r(3, 10), r(49, 100)] {
            let d = galpha_densities(a).unwrap();
            let t1 = d.get(DensityFunctional::Edge).unwrap();
            let t2 = d.get(DensityFunctional::KStar(2)).unwrap();
            let chain3 = d.get(DensityFunctional::Chain3).unwrap();
            let cycle4 = d.get(DensityFunctional::Cycle4).unwrap();
            let (z1, z2) = zeta_of_alpha(a).unwrap();
            assert_eq!(z1, t1 - t2 - r(1, 6));
            assert_eq!(z2, t1 * t1 - r(2, 1) * chain3 + cycle4);
        }
        assert!((zeta_of_alpha(0.2f64).unwrap().0 - 0.16 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn discretization_converges_to_polynomials() {
        let poly = galpha_densities(0.1f64).unwrap().values();
        let g = galpha_graphon(0.1, 512).unwrap();
        let direct = g.densities(&[
            DensityFunctional::Edge,
            DensityFunctional::KStar(2),
            DensityFunctional::Chain3,
            DensityFunctional::Cycle4,
        ]);
        for (p, d) in poly.iter().zip(direct.values()) {
            assert!((p - d).abs() < 1e-3, "{p} vs {d}");
        }
    }

    #[test]
    fn graphon_zeta_agrees_with_formula() {
        for a in [0.05f64, 0.2, 0.3] {
            let g = galpha_graphon(a, 256).unwrap();
            let (z1, _) = zeta_of_graphon(&g);
            let (f1, _) = zeta_of_alpha(a).unwrap();
            assert!((z1 - f1).abs() < 1e-4);
        }
    }

    #[test]
    fn alpha_range_is_enforced() {
        assert!(ForcedSpec::new(0.5, ForcedMode::FourDensities).is_err());
        assert!(ForcedSpec::new(-0.1, ForcedMode::ZetaConstraints).is_err());
        assert!(galpha_densities(0.6f64).is_err());
        assert!(podality_trend(&[0.1, 0.2], ForcedMode::ZetaConstraints, &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn mode_round_trips() {
        for m in [ForcedMode::FourDensities, ForcedMode::ZetaConstraints] {
            assert_eq!(m.to_string().parse::<ForcedMode>().unwrap(), m);
        }
    }
}
