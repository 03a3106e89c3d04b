//! Exact first derivatives of the densities and the entropy, in graphon
//! coordinates `(c, g)` and in the unconstrained solver coordinates.

use super::constraints::{ConstraintSet, Functional};
use crate::graphon::{bernoulli_entropy, DensityFunctional, StepGraphon};

/// Partial derivatives of a functional of a step graphon.
///
/// `dc[m]` is the partial in `c_m` with the fractions treated as free
/// variables. `dg[i*k + j]` is the symmetric per-entry partial: moving the
/// pair `g_ij = g_ji` by `h` changes the functional by
/// `(2 − δ_ij)·dg[i*k + j]·h` to first order.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphonGradient {
    pub dc: Vec<f64>,
    pub dg: Vec<f64>,
}

impl GraphonGradient {
    fn zeros(k: usize) -> Self {
        Self { dc: vec![0.0; k], dg: vec![0.0; k * k] }
    }

    fn axpy(&mut self, a: f64, other: &GraphonGradient) {
        for (x, y) in self.dc.iter_mut().zip(&other.dc) {
            *x += a * y;
        }
        for (x, y) in self.dg.iter_mut().zip(&other.dg) {
            *x += a * y;
        }
    }
}

pub fn density_gradient(g: &StepGraphon<f64>, f: DensityFunctional) -> GraphonGradient {
    match f {
        DensityFunctional::Edge => star_gradient(g, 1),
        DensityFunctional::KStar(k) => star_gradient(g, k),
        DensityFunctional::Chain3 => chain3_gradient(g),
        DensityFunctional::Cycle4 => cycle4_gradient(g),
        DensityFunctional::SignedQuad => {
            let t1 = g.edge_density();
            let mut out = cycle4_gradient(g);
            out.axpy(-2.0, &chain3_gradient(g));
            out.axpy(2.0 * t1, &star_gradient(g, 1));
            out
        }
    }
}

pub fn functional_gradient(g: &StepGraphon<f64>, f: Functional) -> GraphonGradient {
    match f {
        Functional::Density(d) => density_gradient(g, d),
        Functional::Zeta1 => {
            let mut out = star_gradient(g, 1);
            out.axpy(-1.0, &star_gradient(g, 2));
            out
        }
    }
}

fn star_gradient(g: &StepGraphon<f64>, k: u32) -> GraphonGradient {
    let n = g.k();
    let c = g.fractions();
    let d = g.degree_vector();
    let kf = k as f64;
    let dk1: Vec<f64> = d.iter().map(|&x| x.powi(k as i32 - 1)).collect();
    let mut out = GraphonGradient::zeros(n);
    for m in 0..n {
        let cross: f64 = (0..n).map(|i| c[i] * dk1[i] * g.value(i, m)).sum();
        out.dc[m] = d[m].powi(k as i32) + kf * cross;
        for j in 0..n {
            out.dg[m * n + j] = 0.5 * kf * c[m] * c[j] * (dk1[m] + dk1[j]);
        }
    }
    out
}

fn chain3_gradient(g: &StepGraphon<f64>) -> GraphonGradient {
    let n = g.k();
    let c = g.fractions();
    let d = g.degree_vector();
    let h: Vec<f64> = (0..n).map(|x| (0..n).map(|y| g.value(x, y) * c[y] * d[y]).sum()).collect();
    let mut out = GraphonGradient::zeros(n);
    for m in 0..n {
        let cross: f64 = (0..n).map(|i| c[i] * h[i] * g.value(i, m)).sum();
        out.dc[m] = 2.0 * d[m] * h[m] + 2.0 * cross;
        for j in 0..n {
            out.dg[m * n + j] = c[m] * c[j] * (d[m] * d[j] + h[m] + h[j]);
        }
    }
    out
}

fn cycle4_gradient(g: &StepGraphon<f64>) -> GraphonGradient {
    let n = g.k();
    let c = g.fractions();
    let p = g.two_path_matrix();
    let mut out = GraphonGradient::zeros(n);
    for a in 0..n {
        out.dc[a] = 4.0 * (0..n).map(|j| c[j] * p[a * n + j] * p[a * n + j]).sum::<f64>();
        for b in 0..n {
            // Q = G C P
            let q: f64 = (0..n).map(|m| g.value(a, m) * c[m] * p[m * n + b]).sum();
            out.dg[a * n + b] = 4.0 * c[a] * c[b] * q;
        }
    }
    out
}

/// Gradient of the Shannon entropy; entries at 0 or 1 have infinite slope.
pub fn entropy_gradient(g: &StepGraphon<f64>) -> GraphonGradient {
    let n = g.k();
    let c = g.fractions();
    let mut out = GraphonGradient::zeros(n);
    for a in 0..n {
        out.dc[a] = (0..n).map(|j| c[j] * bernoulli_entropy(g.value(a, j))).sum();
        for b in 0..n {
            let w = g.value(a, b);
            out.dg[a * n + b] = 0.5 * c[a] * c[b] * ((1.0 - w) / w).ln();
        }
    }
    out
}

/// Smooth bijection between `R^{K−1} × R^{K(K+1)/2}` and interior K-podal
/// graphons: softmax fractions with the last logit pinned to zero, and
/// logistic values for the upper triangle (row-major, diagonal included).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parametrization {
    k: usize,
}

/// Largest logit magnitude produced by [`Parametrization::encode`].
const MAX_LOGIT: f64 = 30.0;

impl Parametrization {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "at least one block");
        Self { k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k - 1 + self.k * (self.k + 1) / 2
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.k).flat_map(move |i| (i..self.k).map(move |j| (i, j)))
    }

    pub fn fractions(&self, theta: &[f64]) -> Vec<f64> {
        let k = self.k;
        let logits = &theta[..k - 1];
        let top = logits.iter().fold(0.0f64, |m, &a| m.max(a));
        let mut c: Vec<f64> = logits.iter().map(|&a| (a - top).exp()).collect();
        c.push((-top).exp());
        let total: f64 = c.iter().sum();
        for v in &mut c {
            *v /= total;
        }
        let head: f64 = c[..k - 1].iter().sum();
        c[k - 1] = (1.0 - head).max(0.0);
        c
    }

    pub fn graphon(&self, theta: &[f64]) -> StepGraphon<f64> {
        assert_eq!(theta.len(), self.dim(), "parameter length");
        let k = self.k;
        let c = self.fractions(theta);
        let mut g = vec![0.0; k * k];
        for ((i, j), &u) in self.pairs().zip(&theta[k - 1..]) {
            let v = logistic(u);
            g[i * k + j] = v;
            g[j * k + i] = v;
        }
        StepGraphon::from_parts_unchecked(c, g)
    }

    /// Parameters of the interior graphon nearest to `g`: fractions are
    /// floored at `e^{−30}` relative to the last block and values are kept
    /// inside the logistic range `[σ(−30), σ(30)]`.
    pub fn encode(&self, g: &StepGraphon<f64>) -> Vec<f64> {
        assert_eq!(g.k(), self.k, "block count");
        let k = self.k;
        let c = g.fractions();
        let last = c[k - 1].max(f64::MIN_POSITIVE);
        let mut theta: Vec<f64> = c[..k - 1]
            .iter()
            .map(|&ci| (ci.max(f64::MIN_POSITIVE) / last).ln().clamp(-MAX_LOGIT, MAX_LOGIT))
            .collect();
        theta.extend(self.pairs().map(|(i, j)| logit(g.value(i, j)).clamp(-MAX_LOGIT, MAX_LOGIT)));
        theta
    }

    /// Chain rule from a graphon-coordinate gradient to parameter space.
    pub fn pullback(&self, g: &StepGraphon<f64>, grad: &GraphonGradient) -> Vec<f64> {
        let k = self.k;
        let c = g.fractions();
        let mean: f64 = c.iter().zip(&grad.dc).map(|(a, b)| a * b).sum();
        let mut out: Vec<f64> = (0..k - 1).map(|l| c[l] * (grad.dc[l] - mean)).collect();
        out.extend(self.pairs().map(|(i, j)| {
            let v = g.value(i, j);
            let mult = if i == j { 1.0 } else { 2.0 };
            mult * grad.dg[i * k + j] * v * (1.0 - v)
        }));
        out
    }

    /// Entropy gradient in parameter space. Uses `S'(σ(u)) = −u`, so it stays
    /// finite even where the logistic saturates in floating point.
    pub fn entropy_pullback(&self, theta: &[f64], g: &StepGraphon<f64>) -> Vec<f64> {
        let k = self.k;
        let c = g.fractions();
        let dc: Vec<f64> = (0..k)
            .map(|a| (0..k).map(|j| c[j] * bernoulli_entropy(g.value(a, j))).sum())
            .collect();
        let mean: f64 = c.iter().zip(&dc).map(|(a, b)| a * b).sum();
        let mut out: Vec<f64> = (0..k - 1).map(|l| c[l] * (dc[l] - mean)).collect();
        out.extend(self.pairs().zip(&theta[k - 1..]).map(|((i, j), &u)| {
            let v = g.value(i, j);
            let mult = if i == j { 1.0 } else { 2.0 };
            mult * 0.5 * c[i] * c[j] * (-u) * v * (1.0 - v)
        }));
        out
    }
}

pub(crate) fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(v: f64) -> f64 {
    (v / (1.0 - v)).ln()
}

/// Parameter-space gradients of the entropy and of every constraint functional.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGradients {
    pub entropy: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
}

/// Exact gradients at solver parameters `theta` of a `k`-block graphon.
pub fn analytic_gradients(theta: &[f64], k: usize, cs: &ConstraintSet) -> ParameterGradients {
    let param = Parametrization::new(k);
    let g = param.graphon(theta);
    ParameterGradients {
        entropy: param.entropy_pullback(theta, &g),
        constraints: cs
            .items()
            .iter()
            .map(|item| param.pullback(&g, &functional_gradient(&g, item.functional)))
            .collect(),
    }
}
