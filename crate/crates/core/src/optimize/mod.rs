//! Entropy maximization over K-podal graphons under equality constraints on
//! densities: multi-start augmented Lagrangian with an inner BFGS, a
//! Newton-KKT polish, and a sweep over the number of blocks.

mod bfgs;
pub mod constraints;
pub mod diagnostics;
pub mod gradient;
pub mod init;
mod solver;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use bfgs::{minimize, BfgsOptions, BfgsOutcome};
pub use constraints::{Constraint, ConstraintSet, Functional, MAX_CONSTRAINTS};
pub use diagnostics::{bipodal_identity_residual, el_fit, el_residual_2star, el_star_fit, ElFit, ElStarFit};
pub use gradient::{analytic_gradients, ParameterGradients, Parametrization};
pub use init::{initializers, initializers_with};

use crate::canonical::{canonicalize, DEFAULT_DROP_TOL, DEFAULT_MERGE_TOL};
use crate::graphon::{GraphonError, StepGraphon};
use crate::phase::{feasible, PhaseError, PhasePoint};
use solver::{solve_from, RunOutcome, RunStatus};

/// Largest supported block count.
pub const MAX_BLOCKS: usize = 16;
/// Entropy window within which restarts count as reaching the maximum.
pub const ENTROPY_TIE_TOL: f64 = 1e-7;
/// Degree-distribution distance below which two maximizers are one cluster.
pub const CLUSTER_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid constraints: {0}")]
    Constraints(String),
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error("diagnostic undefined: {0}")]
    Diagnostic(String),
    #[error("infeasible: no restart met the constraints (smallest violation {residual:e}); {detail}")]
    Infeasible { residual: f64, detail: String },
    #[error("max-iterations: no restart reached stationarity (best KKT residual {:e})", .0.kkt_residual)]
    MaxIterations(Box<OptimizationResult>),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Graphon(#[from] GraphonError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub k_max: usize,
    pub restarts: usize,
    pub constraint_tol: f64,
    pub grad_tol: f64,
    pub penalty_growth: f64,
    pub max_outer: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            k_max: 8,
            restarts: 24,
            constraint_tol: 1e-9,
            grad_tol: 1e-7,
            penalty_growth: 10.0,
            max_outer: 30,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        let bad = |msg: String| Err(OptimizeError::Config(msg));
        if self.k_max == 0 || self.k_max > MAX_BLOCKS {
            return bad(format!("k_max must be in 1..={MAX_BLOCKS}, got {}", self.k_max));
        }
        if self.restarts == 0 {
            return bad("restarts must be positive".into());
        }
        if !(self.constraint_tol > 0.0 && self.grad_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.penalty_growth > 1.0) {
            return bad(format!("penalty_growth must exceed 1, got {}", self.penalty_growth));
        }
        if self.max_outer == 0 {
            return bad("max_outer must be positive".into());
        }
        Ok(())
    }
}

/// A group of near-optimal restarts with matching degree distributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub graphon: StepGraphon<f64>,
    pub entropy: f64,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub constraints: ConstraintSet,
    pub entropy: f64,
    /// Canonical form of the maximizer.
    pub graphon: StepGraphon<f64>,
    pub podality: usize,
    pub el_residual: f64,
    pub clusters: Vec<Cluster>,
    /// `|t − target|` per constraint, on the uncanonicalized maximizer.
    pub residuals: Vec<f64>,
    /// Fitted `β` of `ln(1/g − 1) = Σ β_m φ_m`.
    pub multipliers: Vec<f64>,
    /// Effective podality of the maximizer.
    pub k_used: usize,
    /// Block count of the solve that produced the maximizer.
    pub k_requested: usize,
    pub restarts_agreeing: usize,
    pub kkt_residual: f64,
    /// Maximizer as returned by the solver, with `k_requested` blocks.
    pub raw: StepGraphon<f64>,
}

impl OptimizationResult {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

struct Candidate {
    outcome: RunOutcome,
    canonical: StepGraphon<f64>,
    k: usize,
}

fn canonical_order(a: &StepGraphon<f64>, b: &StepGraphon<f64>) -> Ordering {
    a.k().cmp(&b.k()).then_with(|| {
        a.fractions()
            .iter()
            .chain(a.values())
            .zip(b.fractions().iter().chain(b.values()))
            .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Wasserstein-1 distance between the degree distributions of two graphons.
pub fn degree_distance(a: &StepGraphon<f64>, b: &StepGraphon<f64>) -> f64 {
    let mut atoms: Vec<(f64, f64)> = a
        .degree_vector()
        .into_iter()
        .zip(a.fractions().iter().copied())
        .chain(b.degree_vector().into_iter().zip(b.fractions().iter().map(|c| -c)))
        .collect();
    atoms.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
    let mut cdf_gap = 0.0;
    let mut total = 0.0;
    for w in atoms.windows(2) {
        cdf_gap += w[0].1;
        total += cdf_gap.abs() * (w[1].0 - w[0].0);
    }
    total
}

fn run_k(cs: &ConstraintSet, k: usize, cfg: &OptimizerConfig, extra: &[StepGraphon<f64>]) -> Vec<Candidate> {
    let seeds = initializers_with(cs, k, cfg.restarts, cfg.seed, extra);
    seeds
        .par_iter()
        .map(|theta| {
            let outcome = solve_from(cs, k, theta, cfg);
            let canonical = canonicalize(&outcome.graphon, DEFAULT_MERGE_TOL, DEFAULT_DROP_TOL)
                .unwrap_or_else(|_| outcome.graphon.clone());
            Candidate { outcome, canonical, k }
        })
        .collect()
}

fn by_entropy_then_canonical(a: &Candidate, b: &Candidate) -> Ordering {
    b.outcome
        .entropy
        .partial_cmp(&a.outcome.entropy)
        .unwrap_or(Ordering::Equal)
        .then_with(|| canonical_order(&a.canonical, &b.canonical))
}

fn build_result(cs: &ConstraintSet, chosen: &Candidate, pool: &[&Candidate]) -> OptimizationResult {
    let best = pool.iter().map(|c| c.outcome.entropy).fold(f64::NEG_INFINITY, f64::max);
    let mut near: Vec<&Candidate> = pool
        .iter()
        .copied()
        .filter(|c| c.outcome.entropy >= best - ENTROPY_TIE_TOL)
        .collect();
    near.sort_by(|a, b| by_entropy_then_canonical(a, b));
    let mut clusters: Vec<Cluster> = Vec::new();
    for c in &near {
        match clusters.iter_mut().find(|cl| degree_distance(&cl.graphon, &c.canonical) < CLUSTER_TOL) {
            Some(cl) => cl.members += 1,
            None => clusters.push(Cluster { graphon: c.canonical.clone(), entropy: c.outcome.entropy, members: 1 }),
        }
    }
    let fit = el_fit(&chosen.outcome.graphon, cs);
    OptimizationResult {
        constraints: cs.clone(),
        entropy: chosen.outcome.entropy,
        graphon: chosen.canonical.clone(),
        podality: chosen.canonical.k(),
        el_residual: fit.residual,
        clusters,
        residuals: chosen.outcome.violations.iter().map(|v| v.abs()).collect(),
        multipliers: fit.beta,
        k_used: chosen.canonical.k(),
        k_requested: chosen.k,
        restarts_agreeing: near.len(),
        kkt_residual: chosen.outcome.kkt,
        raw: chosen.outcome.graphon.clone(),
    }
}

/// Picks the smallest block count within `ENTROPY_TIE_TOL` of the best
/// stationary feasible entropy.
fn assemble(cs: &ConstraintSet, candidates: &[Candidate]) -> Result<OptimizationResult, OptimizeError> {
    let converged: Vec<&Candidate> = candidates.iter().filter(|c| c.outcome.status == RunStatus::Converged).collect();
    if !converged.is_empty() {
        let best = converged.iter().map(|c| c.outcome.entropy).fold(f64::NEG_INFINITY, f64::max);
        let chosen = converged
            .iter()
            .copied()
            .filter(|c| c.outcome.entropy >= best - ENTROPY_TIE_TOL)
            .min_by(|a, b| a.k.cmp(&b.k).then_with(|| by_entropy_then_canonical(a, b)))
            .expect("non-empty");
        return Ok(build_result(cs, chosen, &converged));
    }
    let feasible: Vec<&Candidate> = candidates.iter().filter(|c| c.outcome.status == RunStatus::Feasible).collect();
    if let Some(best) = feasible.iter().copied().min_by(|a, b| by_entropy_then_canonical(a, b)) {
        return Err(OptimizeError::MaxIterations(Box::new(build_result(cs, best, &feasible))));
    }
    let residual = candidates.iter().map(|c| c.outcome.max_violation()).fold(f64::INFINITY, f64::min);
    Err(OptimizeError::Infeasible { residual, detail: format!("targets {cs}") })
}

fn precheck(cs: &ConstraintSet) -> Result<(), OptimizeError> {
    if let Some((eps, k, tau)) = cs.as_edge_star() {
        match feasible(PhasePoint::new(eps, tau, k)) {
            Ok(false) => {
                return Err(OptimizeError::Infeasible {
                    residual: f64::NAN,
                    detail: format!("({eps}, {tau}) lies outside the {k}-star phase space"),
                })
            }
            Ok(true) | Err(PhaseError::UnverifiedK { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

/// Best maximizer over `cfg.restarts` starts with exactly `k` blocks.
#[allow(non_snake_case)]
pub fn maximize_entropy_K(cs: &ConstraintSet, k: usize, cfg: &OptimizerConfig) -> Result<OptimizationResult, OptimizeError> {
    maximize_entropy_k_with(cs, k, cfg, &[])
}

/// As [`maximize_entropy_K`], with extra starting graphons.
pub fn maximize_entropy_k_with(
    cs: &ConstraintSet,
    k: usize,
    cfg: &OptimizerConfig,
    extra: &[StepGraphon<f64>],
) -> Result<OptimizationResult, OptimizeError> {
    cfg.validate()?;
    if k == 0 || k > MAX_BLOCKS {
        return Err(OptimizeError::Config(format!("block count must be in 1..={MAX_BLOCKS}, got {k}")));
    }
    precheck(cs)?;
    assemble(cs, &run_k(cs, k, cfg, extra))
}

/// Sweeps `K = 1..=cfg.k_max` and pools every restart.
pub fn maximize_entropy(cs: &ConstraintSet, cfg: &OptimizerConfig) -> Result<OptimizationResult, OptimizeError> {
    maximize_entropy_with(cs, cfg, &[])
}

pub fn maximize_entropy_with(
    cs: &ConstraintSet,
    cfg: &OptimizerConfig,
    extra: &[StepGraphon<f64>],
) -> Result<OptimizationResult, OptimizeError> {
    cfg.validate()?;
    precheck(cs)?;
    let candidates: Vec<Candidate> = (1..=cfg.k_max)
        .into_par_iter()
        .flat_map_iter(|k| run_k(cs, k, cfg, extra))
        .collect();
    assemble(cs, &candidates)
}
