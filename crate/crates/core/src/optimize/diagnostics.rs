//! Optimality diagnostics of a candidate maximizer: the stationarity
//! condition `ln(1/g_ij − 1) = Σ_m β_m φ_m(i, j)` and the bipodal identity.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::constraints::ConstraintSet;
use super::gradient::functional_gradient;
use super::{OptimizationResult, OptimizeError};
use crate::graphon::StepGraphon;

/// Values closer than this to 0 or 1 are excluded from the fit.
pub const EL_INTERIOR_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElFit {
    pub beta: Vec<f64>,
    /// `c`-weighted RMS misfit over the included block pairs.
    pub residual: f64,
    /// Block pairs `(i, j)`, `i ≤ j`, left out because `g_ij` is not interior.
    pub excluded: Vec<(usize, usize)>,
    /// The basis is rank deficient on the included pairs, so `β` is not unique.
    pub degenerate: bool,
}

/// Weighted least squares of `ln(1/g_ij − 1)` on the basis columns `basis`,
/// each evaluated on ordered pairs with weights `c_i c_j`.
fn weighted_fit(g: &StepGraphon<f64>, basis: &[Vec<f64>]) -> ElFit {
    let k = g.k();
    let c = g.fractions();
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let v = g.value(i, j);
            if !(v > EL_INTERIOR_DELTA && v < 1.0 - EL_INTERIOR_DELTA) {
                if i <= j {
                    excluded.push((i, j));
                }
                continue;
            }
            let w = c[i] * c[j];
            if w > 0.0 {
                rows.push((i * k + j, w, (1.0 / v - 1.0).ln()));
            }
        }
    }
    let p = basis.len();
    if rows.is_empty() {
        return ElFit { beta: vec![0.0; p], residual: 0.0, excluded, degenerate: true };
    }
    let a = DMatrix::from_fn(rows.len(), p, |r, col| rows[r].1.sqrt() * basis[col][rows[r].0]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&(_, w, y)| w.sqrt() * y));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cutoff = 1e-9 * smax.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let beta = svd.solve(&b, cutoff).unwrap_or_else(|_| DVector::zeros(p));
    let misfit = &a * &beta - &b;
    let total_weight: f64 = rows.iter().map(|r| r.1).sum();
    ElFit {
        beta: beta.iter().copied().collect(),
        residual: (misfit.norm_squared() / total_weight).sqrt(),
        excluded,
        degenerate: rank < p,
    }
}

/// Fit for an arbitrary constraint set, using the normalized functional
/// derivatives `φ_m(i, j) = dg_m[i, j] / (c_i c_j)` as basis.
pub fn el_fit(g: &StepGraphon<f64>, cs: &ConstraintSet) -> ElFit {
    let k = g.k();
    let c = g.fractions();
    let basis: Vec<Vec<f64>> = cs
        .items()
        .iter()
        .map(|item| {
            let grad = functional_gradient(g, item.functional);
            (0..k * k)
                .map(|idx| {
                    let w = c[idx / k] * c[idx % k];
                    if w > 0.0 {
                        grad.dg[idx] / w
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    weighted_fit(g, &basis)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElStarFit {
    pub beta1: f64,
    pub beta2: f64,
    pub residual: f64,
    pub excluded: Vec<(usize, usize)>,
    pub degenerate: bool,
}

/// Fit of `ln(1/g_ij − 1) = β₁ + β₂(d_i^{k−1} + d_j^{k−1})` for an edge/k-star
/// maximizer.
pub fn el_residual_2star(r: &OptimizationResult) -> Result<ElStarFit, OptimizeError> {
    let (_, k, _) = r
        .constraints
        .as_edge_star()
        .ok_or_else(|| OptimizeError::Constraints("expected an edge plus k-star constraint set".into()))?;
    Ok(el_star_fit(&r.raw, k))
}

pub fn el_star_fit(g: &StepGraphon<f64>, k: u32) -> ElStarFit {
    let n = g.k();
    let d = g.degree_vector();
    let pow: Vec<f64> = d.iter().map(|x| x.powi(k as i32 - 1)).collect();
    let basis = vec![vec![1.0; n * n], (0..n * n).map(|idx| pow[idx / n] + pow[idx % n]).collect()];
    let fit = weighted_fit(g, &basis);
    ElStarFit {
        beta1: fit.beta[0],
        beta2: fit.beta[1],
        residual: fit.residual,
        excluded: fit.excluded,
        degenerate: fit.degenerate,
    }
}

/// `|(1/g₁₁ − 1)(1/g₂₂ − 1) − (1/g₁₂ − 1)²|` for a bipodal graphon.
pub fn bipodal_identity_residual(g: &StepGraphon<f64>) -> Result<f64, OptimizeError> {
    if g.k() != 2 {
        return Err(OptimizeError::Diagnostic(format!("bipodal identity needs 2 blocks, got {}", g.k())));
    }
    let odds = |v: f64| {
        if v > 0.0 && v < 1.0 {
            Ok(1.0 / v - 1.0)
        } else {
            Err(OptimizeError::Diagnostic(format!("boundary value {v} in bipodal identity")))
        }
    };
    let (a, b, m) = (odds(g.value(0, 0))?, odds(g.value(1, 1))?, odds(g.value(0, 1))?);
    Ok((a * b - m * m).abs())
}
