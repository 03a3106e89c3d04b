//! One constrained maximization from one starting point.

use nalgebra::{DMatrix, DVector};

use super::bfgs::{minimize, BfgsOptions};
use super::constraints::ConstraintSet;
use super::gradient::{functional_gradient, Parametrization};
use super::OptimizerConfig;
use crate::graphon::StepGraphon;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RunStatus {
    /// Feasible within tolerance and stationary.
    Converged,
    /// Feasible within tolerance, stationarity not reached.
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone)]
pub(crate) struct RunOutcome {
    pub graphon: StepGraphon<f64>,
    pub entropy: f64,
    pub violations: Vec<f64>,
    pub kkt: f64,
    pub status: RunStatus,
}

impl RunOutcome {
    pub fn max_violation(&self) -> f64 {
        inf_norm(&self.violations)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

const MAX_PENALTY: f64 = 1e10;
const INITIAL_PENALTY: f64 = 10.0;

struct Problem<'a> {
    param: Parametrization,
    cs: &'a ConstraintSet,
}

impl Problem<'_> {
    /// Entropy, violations and their parameter gradients.
    fn eval(&self, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let g = self.param.graphon(theta);
        let s = g.shannon_entropy();
        let ds = self.param.entropy_pullback(theta, &g);
        let h = self.cs.violations(&g);
        let dh = self
            .cs
            .items()
            .iter()
            .map(|c| self.param.pullback(&g, &functional_gradient(&g, c.functional)))
            .collect();
        (s, h, ds, dh)
    }

    /// Gradient of `−S + Σ λ_m t_m`.
    fn lagrangian_grad(&self, theta: &[f64], lambda: &[f64]) -> Vec<f64> {
        let (_, _, ds, dh) = self.eval(theta);
        let mut out: Vec<f64> = ds.iter().map(|v| -v).collect();
        for (l, row) in lambda.iter().zip(&dh) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += l * v;
            }
        }
        out
    }
}

pub(crate) fn solve_from(cs: &ConstraintSet, k: usize, theta0: &[f64], cfg: &OptimizerConfig) -> RunOutcome {
    let problem = Problem { param: Parametrization::new(k), cs };
    let m = cs.len();
    let dim = problem.param.dim();
    let mut theta = theta0.to_vec();
    let mut lambda = vec![0.0; m];
    let mut mu = INITIAL_PENALTY;
    let mut prev_violation = f64::INFINITY;
    let mut omega = 1e-3;
    for _ in 0..cfg.max_outer {
        let lam = lambda.clone();
        let objective = |t: &[f64], grad: &mut [f64]| {
            let (s, h, ds, dh) = problem.eval(t);
            let mut value = -s;
            grad.iter_mut().zip(&ds).for_each(|(g, d)| *g = -d);
            for i in 0..m {
                let w = lam[i] + mu * h[i];
                value += lam[i] * h[i] + 0.5 * mu * h[i] * h[i];
                grad.iter_mut().zip(&dh[i]).for_each(|(g, d)| *g += w * d);
            }
            value
        };
        let inner = minimize(objective, &theta, BfgsOptions { max_iter: 200 + 40 * dim, grad_tol: omega });
        theta = inner.x;
        let (_, h, _, _) = problem.eval(&theta);
        for (l, v) in lambda.iter_mut().zip(&h) {
            *l += mu * v;
        }
        let violation = inf_norm(&h);
        let kkt = inf_norm(&problem.lagrangian_grad(&theta, &lambda));
        if violation <= 0.1 * cfg.constraint_tol && kkt <= 0.1 * cfg.grad_tol {
            break;
        }
        if violation > 0.25 * prev_violation {
            mu = (mu * cfg.penalty_growth).min(MAX_PENALTY);
        }
        prev_violation = violation;
        omega = (omega * 0.1).max(0.01 * cfg.grad_tol);
    }

    if inf_norm(&problem.eval(&theta).1) < 1e-3 {
        polish(&problem, &mut theta, &mut lambda);
    }

    let (s, h, _, _) = problem.eval(&theta);
    let kkt = inf_norm(&problem.lagrangian_grad(&theta, &lambda));
    let violation = inf_norm(&h);
    let status = if !(violation <= cfg.constraint_tol) || !s.is_finite() {
        RunStatus::Infeasible
    } else if kkt <= cfg.grad_tol {
        RunStatus::Converged
    } else {
        RunStatus::Feasible
    };
    RunOutcome {
        graphon: problem.param.graphon(&theta),
        entropy: s,
        violations: h,
        kkt,
        status,
    }
}

/// Newton iterations on the KKT system `∇ℓ = 0, h = 0` with a
/// finite-difference Hessian of the analytic Lagrangian gradient. A step is
/// accepted only if it lowers `‖D⁻¹∇ℓ‖² + ‖h‖²`, where `D` holds the Hessian
/// diagonal magnitudes, so weakly curved coordinates are resolved as
/// precisely as the stiff ones.
fn polish(problem: &Problem<'_>, theta: &mut Vec<f64>, lambda: &mut Vec<f64>) {
    let n = theta.len();
    let m = lambda.len();
    let merit = |t: &[f64], l: &[f64], scale: &[f64]| {
        let g = problem.lagrangian_grad(t, l);
        let (_, h, _, _) = problem.eval(t);
        let grad_part: f64 = g.iter().zip(scale).map(|(v, s)| (v / s) * (v / s)).sum();
        grad_part + h.iter().map(|v| v * v).sum::<f64>()
    };
    for _ in 0..16 {
        let grad = problem.lagrangian_grad(theta, lambda);
        let (_, h, _, dh) = problem.eval(theta);
        let mut kkt = DMatrix::<f64>::zeros(n + m, n + m);
        for j in 0..n {
            let step = 1e-5 * theta[j].abs().max(1.0);
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[j] += step;
            dn[j] -= step;
            let gu = problem.lagrangian_grad(&up, lambda);
            let gd = problem.lagrangian_grad(&dn, lambda);
            for i in 0..n {
                kkt[(i, j)] += 0.5 * (gu[i] - gd[i]) / (2.0 * step);
                kkt[(j, i)] += 0.5 * (gu[i] - gd[i]) / (2.0 * step);
            }
        }
        for (r, row) in dh.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                kkt[(n + r, j)] = v;
                kkt[(j, n + r)] = v;
            }
        }
        let diag_max = (0..n).fold(0.0f64, |acc, i| acc.max(kkt[(i, i)].abs()));
        let scale: Vec<f64> = (0..n).map(|i| kkt[(i, i)].abs().max(1e-12 * diag_max).max(1e-300)).collect();
        let current = merit(theta, lambda, &scale);
        if current < 1e-30 {
            break;
        }
        let rhs = DVector::from_iterator(n + m, grad.iter().chain(&h).map(|v| -v));
        let svd = kkt.svd(true, true);
        let cutoff = 1e-11 * svd.singular_values.max();
        let Ok(delta) = svd.solve(&rhs, cutoff) else {
            break;
        };
        let mut scale_step = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let t: Vec<f64> = theta.iter().enumerate().map(|(i, v)| v + scale_step * delta[i]).collect();
            let l: Vec<f64> = lambda.iter().enumerate().map(|(i, v)| v + scale_step * delta[n + i]).collect();
            let value = merit(&t, &l, &scale);
            if value.is_finite() && value < current {
                *theta = t;
                *lambda = l;
                accepted = true;
                break;
            }
            scale_step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
}
