//! Edge/2-star phase transition: the symmetric bipodal family, the critical
//! point where it stops maximizing, entropy surfaces, the derivative jump
//! across `ε = 1/2`, and coexisting maximizers above the critical point.

use std::io::Write;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graphon::{bernoulli_entropy, bernoulli_entropy_d1, bernoulli_entropy_d2, StepGraphon};
use crate::optimize::{degree_distance, maximize_entropy, Cluster, ConstraintSet, OptimizeError, OptimizerConfig, CLUSTER_TOL};
use crate::phase::{feasible, PhaseError, PhasePoint};
use crate::report::{format_float, write_csv};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `c = (½, ½)`, `g = ((½+ν, ½), (½, ½−ν))`, with `t₂ = 1/4 + ν²/4`.
pub fn symmetric_bipodal(nu: f64) -> Result<StepGraphon<f64>, AnalysisError> {
    if !(0.0..0.5).contains(&nu) {
        return Err(AnalysisError::Domain(format!("nu must lie in [0, 1/2), got {nu}")));
    }
    Ok(StepGraphon::new(vec![0.5, 0.5], vec![vec![0.5 + nu, 0.5], vec![0.5, 0.5 - nu]])?)
}

impl From<crate::graphon::GraphonError> for AnalysisError {
    fn from(e: crate::graphon::GraphonError) -> Self {
        AnalysisError::Domain(e.to_string())
    }
}

/// `1 − g(1−x, 1−y)`: complement with the block order reversed.
pub fn complement_flip(g: &StepGraphon<f64>) -> StepGraphon<f64> {
    let order: Vec<usize> = (0..g.k()).rev().collect();
    g.permuted(&order).complement()
}

/// Image of `(ε, τ₂)` under the complement symmetry.
pub fn mirror_point(eps: f64, tau2: f64) -> (f64, f64) {
    (1.0 - eps, 1.0 - 2.0 * eps + tau2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub nu: f64,
    pub tau2_c: f64,
    pub sigma2_c: f64,
    /// Value of the defining equation at `nu`.
    pub residual: f64,
}

/// Left side of the transcendental equation for `ν`:
/// `(2S(½−ν) − 2S(½) + 3νS′(½−ν))(2 − ½S″(½−ν)) + 8ν²S″(½−ν)`.
pub fn critical_equation(nu: f64) -> f64 {
    let w = 0.5 - nu;
    let s1 = bernoulli_entropy_d1(w);
    let s2 = bernoulli_entropy_d2(w);
    (2.0 * bernoulli_entropy(w) - 2.0 * bernoulli_entropy(0.5) + 3.0 * nu * s1) * (2.0 - 0.5 * s2) + 8.0 * nu * nu * s2
}

/// Root of [`critical_equation`] in `(0, ½)`.
pub fn critical_tau2() -> Result<CriticalPoint, AnalysisError> {
    critical_tau2_in(0.01, 0.49)
}

/// Root search restricted to `[lo, hi]`: the first sign change on a grid of
/// 400 cells, refined by bisection to machine precision.
pub fn critical_tau2_in(lo: f64, hi: f64) -> Result<CriticalPoint, AnalysisError> {
    if !(0.0 < lo && lo < hi && hi < 0.5) {
        return Err(AnalysisError::Domain(format!("bracket [{lo}, {hi}] must lie inside (0, 1/2)")));
    }
    let cells = 400;
    let at = |i: usize| lo + (hi - lo) * i as f64 / cells as f64;
    let (mut a, mut b) = (1..=cells)
        .map(|i| (at(i - 1), at(i)))
        .find(|&(a, b)| critical_equation(a).signum() != critical_equation(b).signum())
        .ok_or_else(|| AnalysisError::Domain(format!("no sign change in [{lo}, {hi}]")))?;
    let fa_sign = critical_equation(a).signum();
    while b - a > 4.0 * f64::EPSILON * b {
        let mid = 0.5 * (a + b);
        if critical_equation(mid).signum() == fa_sign {
            a = mid;
        } else {
            b = mid;
        }
    }
    let nu = if critical_equation(a).abs() <= critical_equation(b).abs() { a } else { b };
    let tau2_c = 0.25 + nu * nu / 4.0;
    Ok(CriticalPoint { nu, tau2_c, sigma2_c: tau2_c - 0.25, residual: critical_equation(nu).abs() })
}

/// Fraction of the block with the largest diagonal value.
pub fn c1_of(g: &StepGraphon<f64>) -> f64 {
    let top = (0..g.k())
        .max_by(|&a, &b| g.value(a, a).partial_cmp(&g.value(b, b)).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty graphon");
    g.fractions()[top]
}

/// Grid of `(ε, σ²)` points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub eps: Vec<f64>,
    pub sigma2: Vec<f64>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl SweepGrid {
    /// Cross-sections `ε = 0.05k`, `k = 1..=19`, plus a band of width 0.04
    /// around `ε = ½` in steps of 0.01.
    pub fn cross_sections(sigma2_min: f64, sigma2_max: f64, n_sigma2: usize) -> Self {
        let mut eps: Vec<f64> = (1..20).map(|k| 0.05 * k as f64).collect();
        eps.extend([0.48, 0.49, 0.51, 0.52]);
        eps.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Self { eps, sigma2: linspace(sigma2_min, sigma2_max, n_sigma2) }
    }
}

/// Parses `"eps0:eps1:neps,sig0:sig1:nsig"`.
impl FromStr for SweepGrid {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let axis = |part: &str| -> Result<Vec<f64>, AnalysisError> {
            let bad = || AnalysisError::Domain(format!("expected start:end:count, got `{part}`"));
            let fields: Vec<&str> = part.trim().split(':').collect();
            if fields.len() != 3 {
                return Err(bad());
            }
            let a: f64 = fields[0].parse().map_err(|_| bad())?;
            let b: f64 = fields[1].parse().map_err(|_| bad())?;
            let n: usize = fields[2].parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            Ok(linspace(a, b, n))
        };
        let (e, s) = s
            .split_once(',')
            .ok_or_else(|| AnalysisError::Domain(format!("expected two axes separated by a comma, got `{s}`")))?;
        Ok(Self { eps: axis(e)?, sigma2: axis(s)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub sigma2: f64,
    pub tau2: f64,
    pub entropy: f64,
    pub c1: f64,
    pub podality: usize,
    pub el_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFailure {
    pub eps: f64,
    pub sigma2: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub grid: SweepGrid,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
    /// Grid points outside the phase space.
    pub skipped: usize,
}

impl SweepTable {
    pub const HEADER: [&'static str; 7] = ["eps", "sigma2", "tau2", "entropy", "c1", "podality", "el_residual"];

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AnalysisError> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    format_float(r.eps),
                    format_float(r.sigma2),
                    format_float(r.tau2),
                    format_float(r.entropy),
                    format_float(r.c1),
                    r.podality.to_string(),
                    format_float(r.el_residual),
                ]
            })
            .collect();
        Ok(write_csv(out, &Self::HEADER, &rows)?)
    }
}

/// Maximal entropy at every feasible grid point. Failures are recorded per
/// point; points outside the phase space are skipped.
pub fn entropy_surface(grid: &SweepGrid, cfg: &OptimizerConfig) -> SweepTable {
    let points: Vec<(f64, f64)> = grid
        .eps
        .iter()
        .flat_map(|&e| grid.sigma2.iter().map(move |&s| (e, s)))
        .collect();
    let outcomes: Vec<Option<Result<SweepRow, SweepFailure>>> = points
        .par_iter()
        .map(|&(eps, sigma2)| {
            let tau2 = eps * eps + sigma2;
            if sigma2 < 0.0 || !feasible(PhasePoint::new(eps, tau2, 2)).unwrap_or(false) {
                return None;
            }
            let fail = |error: String| SweepFailure { eps, sigma2, error };
            let cs = match ConstraintSet::edge_star(eps, 2, tau2) {
                Ok(cs) => cs,
                Err(e) => return Some(Err(fail(e.to_string()))),
            };
            Some(match maximize_entropy(&cs, cfg) {
                Ok(r) => Ok(SweepRow {
                    eps,
                    sigma2,
                    tau2,
                    entropy: r.entropy,
                    c1: c1_of(&r.graphon),
                    podality: r.podality,
                    el_residual: r.el_residual,
                }),
                Err(e) => Err(fail(e.to_string())),
            })
        })
        .collect();
    let mut table = SweepTable { grid: grid.clone(), rows: Vec::new(), failures: Vec::new(), skipped: 0 };
    for outcome in outcomes {
        match outcome {
            None => table.skipped += 1,
            Some(Ok(row)) => table.rows.push(row),
            Some(Err(f)) => table.failures.push(f),
        }
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub eps: f64,
    pub entropy: f64,
    /// Central difference (one-sided at the ends of the window).
    pub derivative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeScan {
    pub tau2: f64,
    pub h: f64,
    pub profile: Vec<ProfilePoint>,
    pub slope_left: f64,
    pub slope_right: f64,
    pub stderr_left: f64,
    pub stderr_right: f64,
    pub jump_size: f64,
    /// Ten combined standard errors.
    pub threshold: f64,
    pub jump_detected: bool,
}

/// Points used on each side of `ε = ½`, excluding the centre.
pub const SIDE_POINTS: usize = 5;

/// Slope at `x = 0` and its standard error from a least-squares quadratic.
fn quadratic_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let x = DMatrix::from_fn(n, 3, |r, c| xs[r].powi(c as i32));
    let y = DVector::from_column_slice(ys);
    let xtx = x.transpose() * &x;
    let inv = xtx.try_inverse().expect("distinct abscissae give a regular design");
    let beta = &inv * x.transpose() * &y;
    let resid = &x * &beta - &y;
    let dof = (n as f64 - 3.0).max(1.0);
    let s2 = resid.norm_squared() / dof;
    (beta[1], (s2 * inv[(1, 1)]).sqrt())
}

/// Entropy profile along `ε` at fixed `τ₂` with step `h` over `window`, and
/// the jump of `∂s/∂ε` across `ε = ½` estimated from one-sided quadratic fits
/// through the centre and `SIDE_POINTS` points on each side.
pub fn derivative_scan(
    tau2: f64,
    window: (f64, f64),
    h: f64,
    cfg: &OptimizerConfig,
) -> Result<DerivativeScan, AnalysisError> {
    let (lo, hi) = window;
    if !(h > 0.0) || !(lo < 0.5 && hi > 0.5) {
        return Err(AnalysisError::Domain(format!("window [{lo}, {hi}] must straddle 1/2 with h > 0")));
    }
    let below = ((0.5 - lo) / h + 1e-9).floor() as usize;
    let above = ((hi - 0.5) / h + 1e-9).floor() as usize;
    if below < SIDE_POINTS || above < SIDE_POINTS {
        return Err(AnalysisError::Domain(format!(
            "window [{lo}, {hi}] needs {SIDE_POINTS} points of spacing {h} on each side of 1/2"
        )));
    }
    let eps: Vec<f64> = (0..=below + above).map(|i| 0.5 + (i as f64 - below as f64) * h).collect();
    for &e in &eps {
        if !feasible(PhasePoint::new(e, tau2, 2))? {
            return Err(AnalysisError::Domain(format!("grid point ({e}, {tau2}) is infeasible")));
        }
    }
    let entropies = eps
        .par_iter()
        .map(|&e| {
            let cs = ConstraintSet::edge_star(e, 2, tau2)?;
            Ok(maximize_entropy(&cs, cfg)?.entropy)
        })
        .collect::<Result<Vec<f64>, OptimizeError>>()?;
    let n = eps.len();
    let profile = (0..n)
        .map(|i| {
            let derivative = if i == 0 {
                (entropies[1] - entropies[0]) / h
            } else if i == n - 1 {
                (entropies[n - 1] - entropies[n - 2]) / h
            } else {
                (entropies[i + 1] - entropies[i - 1]) / (2.0 * h)
            };
            ProfilePoint { eps: eps[i], entropy: entropies[i], derivative }
        })
        .collect();
    let centre = below;
    let side = |range: std::ops::RangeInclusive<usize>| {
        let xs: Vec<f64> = range.clone().map(|i| eps[i] - 0.5).collect();
        let ys: Vec<f64> = range.map(|i| entropies[i]).collect();
        quadratic_slope(&xs, &ys)
    };
    let (slope_left, stderr_left) = side(centre - SIDE_POINTS..=centre);
    let (slope_right, stderr_right) = side(centre..=centre + SIDE_POINTS);
    let jump_size = (slope_right - slope_left).abs();
    let threshold = 10.0 * stderr_left.hypot(stderr_right);
    Ok(DerivativeScan {
        tau2,
        h,
        profile,
        slope_left,
        slope_right,
        stderr_left,
        stderr_right,
        jump_size,
        threshold,
        jump_detected: jump_size > threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoexistenceReport {
    pub tau2: f64,
    pub clusters: Vec<Cluster>,
    /// Spread of the cluster entropies.
    pub entropy_gap: f64,
    /// Index pairs `(i, j)`, `i < j`, with cluster `j` the complement-flip of `i`.
    pub mirror_pairs: Vec<(usize, usize)>,
    /// Whether each cluster is its own complement-flip.
    pub self_symmetric: Vec<bool>,
}

/// Clusters of near-optimal maximizers at `(½, τ₂)` and how the
/// complement-flip symmetry acts on them.
pub fn coexistence_probe(tau2: f64, cfg: &OptimizerConfig) -> Result<CoexistenceReport, AnalysisError> {
    let cs = ConstraintSet::edge_star(0.5, 2, tau2)?;
    let result = maximize_entropy(&cs, cfg)?;
    let clusters = result.clusters;
    let mirrored: Vec<StepGraphon<f64>> = clusters.iter().map(|c| complement_flip(&c.graphon)).collect();
    let self_symmetric = clusters
        .iter()
        .zip(&mirrored)
        .map(|(c, m)| degree_distance(&c.graphon, m) < CLUSTER_TOL)
        .collect();
    let mut mirror_pairs = Vec::new();
    for i in 0..clusters.len() {
        for j in (i + 1)..clusters.len() {
            if degree_distance(&mirrored[i], &clusters[j].graphon) < CLUSTER_TOL {
                mirror_pairs.push((i, j));
            }
        }
    }
    let (lo, hi) = clusters
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.entropy), hi.max(c.entropy)));
    Ok(CoexistenceReport { tau2, clusters, entropy_gap: hi - lo, mirror_pairs, self_symmetric })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_bipodal_family() {
        let er = symmetric_bipodal(0.0).unwrap();
        assert!(er.values().iter().all(|&v| v == 0.5));
        let g = symmetric_bipodal(0.2).unwrap();
        assert!((g.edge_density() - 0.5).abs() < 1e-15);
        assert!((g.star_density(2) - 0.26).abs() < 1e-15);
        let m = complement_flip(&g);
        for (a, b) in m.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(symmetric_bipodal(0.5).is_err());
        assert!(symmetric_bipodal(-0.1).is_err());
    }

    #[test]
    fn critical_point() {
        let cp = critical_tau2().unwrap();
        assert!((cp.tau2_c - 0.287).abs() < 5e-4, "{cp:?}");
        assert!((cp.sigma2_c - 0.037).abs() < 5e-4);
        assert!(cp.residual.abs() < 1e-10);
        assert!((cp.tau2_c - 0.25 - cp.nu * cp.nu / 4.0).abs() < 1e-15);
        let other = critical_tau2_in(0.2, 0.45).unwrap();
        assert!((other.tau2_c - cp.tau2_c).abs() < 1e-9);
    }

    #[test]
    fn grid_parsing() {
        let g: SweepGrid = "0.1:0.9:5,0:0.04:3".parse().unwrap();
        assert_eq!(g.eps.len(), 5);
        assert_eq!(g.sigma2, vec![0.0, 0.02, 0.04]);
        assert!("0.1:0.9,0:1:2".parse::<SweepGrid>().is_err());
        assert!("0.1:0.9:3".parse::<SweepGrid>().is_err());
        let cs = SweepGrid::cross_sections(0.0, 0.05, 6);
        assert!(cs.eps.iter().any(|&e| (e - 0.5).abs() < 1e-12));
        assert_eq!(cs.eps.len(), 23);
    }

    #[test]
    fn lower_boundary_limit() {
        let grid = SweepGrid { eps: vec![0.3], sigma2: vec![0.0, -0.01, 0.5] };
        let table = entropy_surface(&grid, &OptimizerConfig { k_max: 2, restarts: 4, ..Default::default() });
        assert_eq!(table.skipped, 2);
        assert_eq!(table.rows.len(), 1);
        let er = StepGraphon::constant(0.3).unwrap().shannon_entropy();
        assert!((table.rows[0].entropy - er).abs() < 1e-9);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("eps,sigma2,tau2,entropy,c1,podality,el_residual\n"));
    }

    #[test]
    fn quadratic_fit_recovers_slope() {
        let xs: Vec<f64> = (0..6).map(|i| -(i as f64) * 1e-3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x - 3.0 * x * x).collect();
        let (slope, se) = quadratic_slope(&xs, &ys);
        assert!((slope - 2.0).abs() < 1e-8);
        assert!(se < 1e-8);
    }

    #[test]
    fn scan_rejects_bad_windows() {
        let cfg = OptimizerConfig::default();
        assert!(derivative_scan(0.3, (0.51, 0.6), 1e-3, &cfg).is_err());
        assert!(derivative_scan(0.3, (0.498, 0.502), 1e-3, &cfg).is_err());
    }
}
