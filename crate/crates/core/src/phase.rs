//! Phase-space geometry of the edge/k-star model: the Erdős–Rényi lower
//! boundary, the clique/anticlique upper boundary, their crossing point, and
//! the numerical check that rules out the competing tripodal and bipodal
//! 0–1 configurations for `2 ≤ k ≤ 30`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graphon::StepGraphon;
use crate::scalar::{powi, Real};

/// Largest star order for which the upper boundary has been verified.
pub const MAX_VERIFIED_K: u32 = 30;
/// Slack used by [`feasible`].
pub const FEASIBILITY_SLACK: f64 = 1e-12;
/// Distance from the ends of (0, 1) kept by the Step-4 grid.
pub const STEP4_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("star order k = {k} is outside the verified range 2..=30")]
    UnverifiedK { k: u32 },
    #[error("{0}")]
    Domain(String),
}

/// Which star orders an operation accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KPolicy {
    /// `2 ≤ k ≤ 30`.
    #[default]
    Verified,
    /// Any `k ≥ 2`; the upper boundary is then a conjecture.
    AllowUnverified,
}

impl KPolicy {
    pub fn check(self, k: u32) -> Result<(), PhaseError> {
        match self {
            _ if k < 2 => Err(PhaseError::UnverifiedK { k }),
            KPolicy::Verified if k > MAX_VERIFIED_K => Err(PhaseError::UnverifiedK { k }),
            _ => Ok(()),
        }
    }
}

/// A point `(ε, τ)` of the edge/k-star plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub eps: f64,
    pub tau: f64,
    pub k: u32,
}

impl PhasePoint {
    pub fn new(eps: f64, tau: f64, k: u32) -> Self {
        Self { eps, tau, k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    Clique,
    Anticlique,
}

/// One of the two 0–1 bipodal families realizing the upper boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundaryBranch {
    pub kind: BranchKind,
    pub k: u32,
}

impl BoundaryBranch {
    pub fn value<T: Real>(&self, eps: T) -> T {
        match self.kind {
            BranchKind::Clique => clique_branch(eps, self.k),
            BranchKind::Anticlique => anticlique_branch(eps, self.k),
        }
    }

    pub fn graphon<T: Real>(&self, eps: T) -> Result<StepGraphon<T>, PhaseError> {
        match self.kind {
            BranchKind::Clique => clique_graphon(eps),
            BranchKind::Anticlique => anticlique_graphon(eps),
        }
    }
}

/// Lower boundary `τ = ε^k`.
pub fn er_curve<T: Real>(eps: T, k: u32) -> T {
    powi(eps, k)
}

/// k-star density of the clique with edge density `ε`: `ε^{(k+1)/2}`.
pub fn clique_branch<T: Real>(eps: T, k: u32) -> T {
    eps.powf(T::int(k as i64 + 1) / T::int(2))
}

/// k-star density of the anticlique with edge density `ε`: `c + c^k − c^{k+1}`
/// with `c = 1 − √(1−ε)`.
pub fn anticlique_branch<T: Real>(eps: T, k: u32) -> T {
    let c = anticlique_fraction(eps);
    c + powi(c, k) - powi(c, k + 1)
}

fn anticlique_fraction<T: Real>(eps: T) -> T {
    T::one() - (T::one() - eps).sqrt()
}

fn check_open_unit<T: Real>(eps: T, what: &str) -> Result<(), PhaseError> {
    if eps > T::zero() && eps < T::one() {
        Ok(())
    } else {
        Err(PhaseError::Domain(format!("{what} needs 0 < eps < 1, got {eps}")))
    }
}

/// Bipodal `1` on `[0, √ε)²` and `0` elsewhere.
pub fn clique_graphon<T: Real>(eps: T) -> Result<StepGraphon<T>, PhaseError> {
    check_open_unit(eps, "clique graphon")?;
    let c = eps.sqrt();
    StepGraphon::new(vec![c, T::one() - c], vec![vec![T::one(), T::zero()], vec![T::zero(), T::zero()]])
        .map_err(|e| PhaseError::Domain(e.to_string()))
}

/// Bipodal `0` on `(c, 1]²` and `1` elsewhere, `c = 1 − √(1−ε)`.
pub fn anticlique_graphon<T: Real>(eps: T) -> Result<StepGraphon<T>, PhaseError> {
    check_open_unit(eps, "anticlique graphon")?;
    let c = anticlique_fraction(eps);
    StepGraphon::new(vec![c, T::one() - c], vec![vec![T::one(), T::one()], vec![T::one(), T::zero()]])
        .map_err(|e| PhaseError::Domain(e.to_string()))
}

/// Edge density where the clique and anticlique branches cross, by bisection
/// on `[0.4, 1 − 1e-9]`.
pub fn crossing_point(k: u32) -> Result<f64, PhaseError> {
    crossing_point_with(k, KPolicy::Verified)
}

pub fn crossing_point_with(k: u32, policy: KPolicy) -> Result<f64, PhaseError> {
    policy.check(k)?;
    let gap = |e: f64| anticlique_branch(e, k) - clique_branch(e, k);
    let (mut lo, mut hi) = (0.4_f64, 1.0 - 1e-9);
    if !(gap(lo) > 0.0 && gap(hi) < 0.0) {
        return Err(PhaseError::Domain(format!("branch difference does not change sign for k = {k}")));
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Branch realizing the upper boundary at `eps`.
pub fn upper_branch(eps: f64, k: u32, policy: KPolicy) -> Result<BoundaryBranch, PhaseError> {
    let eps0 = crossing_point_with(k, policy)?;
    let kind = if eps <= eps0 { BranchKind::Anticlique } else { BranchKind::Clique };
    Ok(BoundaryBranch { kind, k })
}

/// Largest k-star density at edge density `eps`: the anticlique branch below
/// the crossing point and the clique branch above it.
pub fn upper_boundary(eps: f64, k: u32) -> Result<f64, PhaseError> {
    upper_boundary_with(eps, k, KPolicy::Verified)
}

pub fn upper_boundary_with(eps: f64, k: u32, policy: KPolicy) -> Result<f64, PhaseError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(PhaseError::Domain(format!("edge density {eps} outside [0, 1]")));
    }
    Ok(upper_branch(eps, k, policy)?.value(eps))
}

/// Whether `p` lies between the lower and upper boundaries (1e-12 slack).
pub fn feasible(p: PhasePoint) -> Result<bool, PhaseError> {
    feasible_with(p, KPolicy::Verified)
}

pub fn feasible_with(p: PhasePoint, policy: KPolicy) -> Result<bool, PhaseError> {
    policy.check(p.k)?;
    if !(0.0..=1.0).contains(&p.eps) || !(0.0..=1.0).contains(&p.tau) {
        return Ok(false);
    }
    let lower = er_curve(p.eps, p.k);
    let upper = upper_boundary_with(p.eps, p.k, policy)?;
    Ok(p.tau >= lower - FEASIBILITY_SLACK && p.tau <= upper + FEASIBILITY_SLACK)
}

/// A graphon with densities `(ε, τ)`: the convex combination of the constant
/// graphon and the extremal 0–1 graphon on the same bipodal partition, with
/// the mixing weight found by bisection. Along the mixture the edge density
/// stays at `ε` and the star density moves continuously between the two
/// boundaries, so every feasible point is hit.
pub fn realize(p: PhasePoint) -> Result<StepGraphon<f64>, PhaseError> {
    if !feasible(p)? {
        return Err(PhaseError::Domain(format!("({}, {}) is outside the k = {} phase space", p.eps, p.tau, p.k)));
    }
    let er = StepGraphon::constant(p.eps).expect("eps in [0, 1]");
    if p.eps <= 0.0 || p.eps >= 1.0 {
        return Ok(er);
    }
    let extremal = upper_branch(p.eps, p.k, KPolicy::Verified)?.graphon(p.eps)?;
    let mix = |a: f64| {
        let g: Vec<f64> = extremal.values().iter().map(|&v| a * v + (1.0 - a) * p.eps).collect();
        StepGraphon::from_flat(extremal.fractions().to_vec(), g).expect("convex combination stays valid")
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mix(mid).star_density(p.k) < p.tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(mix(0.5 * (lo + hi)))
}

/// Evenly spaced samples of both boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySample {
    pub eps: f64,
    pub tau_lower: f64,
    pub tau_upper: f64,
    pub branch: BranchKind,
}

pub fn boundary_samples(k: u32, samples: usize, policy: KPolicy) -> Result<Vec<BoundarySample>, PhaseError> {
    if samples < 2 {
        return Err(PhaseError::Domain("need at least two boundary samples".into()));
    }
    let eps0 = crossing_point_with(k, policy)?;
    Ok((0..samples)
        .map(|i| {
            let eps = i as f64 / (samples - 1) as f64;
            let kind = if eps <= eps0 { BranchKind::Anticlique } else { BranchKind::Clique };
            let branch = BoundaryBranch { kind, k };
            BoundarySample { eps, tau_lower: er_curve(eps, k), tau_upper: branch.value(eps), branch: kind }
        })
        .collect())
}

// Polynomials shared by the Step-4 functions, for m = 0..=k-2:
//   rising(x)  = Σ (m+1) x^m
//   falling(x) = Σ (k-1-m) x^m
fn rising_sum(x: f64, k: u32) -> f64 {
    (0..k - 1).rev().fold(0.0, |acc, m| acc * x + (m + 1) as f64)
}

fn falling_sum(x: f64, k: u32) -> f64 {
    (0..k - 1).rev().fold(0.0, |acc, m| acc * x + (k - 1 - m) as f64)
}

fn check_step4_domain(x: f64, z: f64, k: u32) -> Result<(), PhaseError> {
    if k < 2 {
        return Err(PhaseError::UnverifiedK { k });
    }
    if !(x > 0.0 && x <= 1.0) || !(z >= 1.0) || !z.is_finite() {
        return Err(PhaseError::Domain(format!("Step-4 functions need 0 < x <= 1 <= z, got x = {x}, z = {z}")));
    }
    Ok(())
}

/// Rate function `f(x, z)` of the tripodal deformation (linear in `z`).
///
/// Evaluated as `k(k−1)x^{k−2}(1−x) + k(k−1)(z−1) − 2(1−x)·rising(x) + (z−1)·falling(x)`,
/// which is the expanded polynomial with the geometric sums folded so that
/// nothing cancels near `x = 1`.
pub fn step4_f(x: f64, z: f64, k: u32) -> Result<f64, PhaseError> {
    check_step4_domain(x, z, k)?;
    let kk = (k * (k - 1)) as f64;
    let u = 1.0 - x;
    Ok(kk * x.powi(k as i32 - 2) * u + kk * (z - 1.0) - 2.0 * u * rising_sum(x, k) + (z - 1.0) * falling_sum(x, k))
}

/// Constraint function `F(x, z) = k x^{k−1} + (z^k−1)/(z−1) − k − (1−x^k)/(1−x)`,
/// evaluated as `(z−1)·falling(z) − (1−x)·rising(x)`.
#[allow(non_snake_case)]
pub fn step4_F(x: f64, z: f64, k: u32) -> Result<f64, PhaseError> {
    check_step4_domain(x, z, k)?;
    Ok((z - 1.0) * falling_sum(z, k) - (1.0 - x) * rising_sum(x, k))
}

/// The root `z(x)` of `f(x, ·) = 0` (f is linear in z).
pub fn step4_root_z(x: f64, k: u32) -> Result<f64, PhaseError> {
    check_step4_domain(x, 1.0, k)?;
    let kk = (k * (k - 1)) as f64;
    let slope = kk + falling_sum(x, k);
    let offset = (1.0 - x) * (2.0 * rising_sum(x, k) - kk * x.powi(k as i32 - 2));
    Ok(1.0 + offset / slope)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Step4Report {
    pub k: u32,
    pub grid: usize,
    /// Largest `F(x, z(x))` over the grid.
    pub max_f: f64,
    pub argmax_x: f64,
    /// Smallest `z(x)` over the grid.
    pub min_z: f64,
    /// Grid points where `z(x) < 1`.
    pub inconsistent_points: usize,
    /// `F(x, z(x))` at `x = 1 − 1e-4`.
    pub value_near_one: f64,
    pub pass: bool,
}

/// Evaluates `F(x, z(x))` on a uniform grid of `grid` points in
/// `(1e-6, 1 − 1e-6)`; passes iff every value is negative and `z(x) ≥ 1`.
pub fn verify_step4(k: u32, grid: usize) -> Result<Step4Report, PhaseError> {
    verify_step4_with(k, grid, KPolicy::Verified)
}

pub fn verify_step4_with(k: u32, grid: usize, policy: KPolicy) -> Result<Step4Report, PhaseError> {
    policy.check(k)?;
    if grid < 1000 {
        return Err(PhaseError::Domain(format!("Step-4 grid must have at least 1000 points, got {grid}")));
    }
    let span = 1.0 - 2.0 * STEP4_MARGIN;
    let eval = |i: usize| -> Result<(f64, f64, f64), PhaseError> {
        let x = STEP4_MARGIN + span * i as f64 / (grid - 1) as f64;
        let z = step4_root_z(x, k)?;
        let value = step4_F(x, z.max(1.0), k)?;
        Ok((x, z, value))
    };
    let points: Vec<(f64, f64, f64)> = (0..grid).into_par_iter().map(eval).collect::<Result<_, _>>()?;
    let (argmax_x, _, max_f) = points
        .iter()
        .copied()
        .fold((f64::NAN, 0.0, f64::NEG_INFINITY), |best, p| if p.2 > best.2 { p } else { best });
    let min_z = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    // exact k = 2 gives z ≡ 1; allow roundoff below that
    let inconsistent_points = points.iter().filter(|p| p.1 < 1.0 - 1e-12).count();
    let x_near = 1.0 - 1e-4;
    let value_near_one = step4_F(x_near, step4_root_z(x_near, k)?.max(1.0), k)?;
    Ok(Step4Report {
        k,
        grid,
        max_f,
        argmax_x,
        min_z,
        inconsistent_points,
        value_near_one,
        pass: max_f < 0.0 && inconsistent_points == 0,
    })
}

/// `t_k / t_1^{(k+1)/2}` along the bipodal 0–1 family with `z = c_2/c_1`:
/// `(z^k + z − 1) / (2z − 1)^{(k+1)/2}`.
pub fn n2_ratio(z: f64, k: u32) -> f64 {
    (z.powi(k as i32) + z - 1.0) / (2.0 * z - 1.0).powf((k as f64 + 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn er_curve_values() {
        assert_eq!(er_curve(0.0, 3), 0.0);
        assert_eq!(er_curve(1.0, 3), 1.0);
        assert_eq!(er_curve(0.5, 2), 0.25);
        let g = StepGraphon::constant(0.42).unwrap();
        assert_abs_diff_eq!(g.star_density(4), er_curve(0.42, 4), epsilon = 1e-15);
    }

    #[test]
    fn clique_examples() {
        let g = clique_graphon(0.25).unwrap();
        assert_abs_diff_eq!(g.fractions()[0], 0.5, epsilon = 1e-15);
        let g = clique_graphon(0.81_f64).unwrap();
        assert_abs_diff_eq!(g.star_density(3), 0.6561, epsilon = 1e-14);
        assert_abs_diff_eq!(clique_branch(0.81, 3), 0.6561, epsilon = 1e-14);
        assert!(clique_graphon(0.0_f64).is_err());
        assert!(clique_graphon(1.0_f64).is_err());
    }

    #[test]
    fn anticlique_examples() {
        let g = anticlique_graphon(0.75_f64).unwrap();
        assert_abs_diff_eq!(g.fractions()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(g.edge_density(), 0.75, epsilon = 1e-15);
        let eps = 1e-3;
        assert_abs_diff_eq!(anticlique_branch(eps, 2), eps / 2.0, epsilon = 2e-6);
        assert!(anticlique_graphon(1.5_f64).is_err());
    }

    #[test]
    fn upper_boundary_examples() {
        assert_abs_diff_eq!(upper_boundary(0.5, 2).unwrap(), 2f64.powf(-1.5), epsilon = 1e-12);
        assert_abs_diff_eq!(anticlique_branch(0.5, 2), clique_branch(0.5, 2), epsilon = 1e-15);
        let c = 1.0 - 0.75f64.sqrt();
        assert_abs_diff_eq!(upper_boundary(0.25, 2).unwrap(), c + c * c - c * c * c, epsilon = 1e-15);
        assert_abs_diff_eq!(upper_boundary(0.9, 3).unwrap(), 0.81, epsilon = 1e-14);
        assert_eq!(upper_boundary(0.5, 31), Err(PhaseError::UnverifiedK { k: 31 }));
        assert!(upper_boundary_with(0.5, 31, KPolicy::AllowUnverified).is_ok());
    }

    #[test]
    fn upper_boundary_is_the_larger_branch() {
        for k in [2, 3, 7, 30] {
            for i in 1..100 {
                let eps = i as f64 / 100.0;
                let both = anticlique_branch(eps, k).max(clique_branch(eps, k));
                assert_abs_diff_eq!(upper_boundary(eps, k).unwrap(), both, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn crossing_points() {
        assert_abs_diff_eq!(crossing_point(2).unwrap(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(crossing_point(3).unwrap(), 0.75, epsilon = 1e-9);
        let e10 = crossing_point(10).unwrap();
        assert!(e10 > 0.75 && e10 < 1.0);
        assert!(crossing_point(1).is_err());
    }

    #[test]
    fn step4_limits_vanish() {
        for k in 2..=30 {
            assert_abs_diff_eq!(step4_f(1.0, 1.0, k).unwrap(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(step4_F(1.0, 1.0, k).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn step4_matches_unfolded_series() {
        // direct evaluation of the original expressions away from x = 1, z = 1
        let series_f = |x: f64, z: f64, k: u32| {
            let k_f = k as f64;
            let geo: f64 = (0..k).map(|j| x.powi(j as i32)).sum();
            k_f * (k_f - 1.0) * (x.powi(k as i32 - 2) * (1.0 - x) + z - 1.0)
                + k_f * (2.0 * x.powi(k as i32 - 1) + (z - 1.0) / (1.0 - x))
                - geo * (2.0 + (z - 1.0) / (1.0 - x))
        };
        let series_big_f = |x: f64, z: f64, k: u32| {
            let k_f = k as f64;
            k_f * x.powi(k as i32 - 1) + (z.powi(k as i32) - 1.0) / (z - 1.0)
                - k_f
                - (1.0 - x.powi(k as i32)) / (1.0 - x)
        };
        for k in [2, 3, 5, 12] {
            for &(x, z) in &[(0.3, 1.7), (0.8, 1.1), (0.05, 3.0)] {
                assert_abs_diff_eq!(step4_f(x, z, k).unwrap(), series_f(x, z, k), epsilon = 1e-9);
                assert_abs_diff_eq!(step4_F(x, z, k).unwrap(), series_big_f(x, z, k), epsilon = 1e-9);
            }
        }
        // k = 2 by hand: f = 3(z - 1), F = (z - 1) - (1 - x)
        assert_abs_diff_eq!(step4_f(0.4, 1.5, 2).unwrap(), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(step4_F(0.4, 1.5, 2).unwrap(), -0.1, epsilon = 1e-15);
    }

    #[test]
    fn step4_f_is_linear_in_z() {
        for k in [3, 8] {
            let x = 0.37;
            let (a, b, c) = (step4_f(x, 1.2, k).unwrap(), step4_f(x, 2.2, k).unwrap(), step4_f(x, 3.2, k).unwrap());
            assert_abs_diff_eq!(b - a, c - b, epsilon = 1e-10);
            let z = step4_root_z(x, k).unwrap();
            assert_abs_diff_eq!(step4_f(x, z, k).unwrap(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn step4_verification_examples() {
        let r3 = verify_step4(3, 10_000).unwrap();
        assert!(r3.pass, "{r3:?}");
        assert!(r3.value_near_one.abs() < 1e-2);
        assert!(verify_step4(20, 10_000).unwrap().pass);
        assert!(verify_step4(3, 999).is_err());
        assert!(verify_step4(31, 10_000).is_err());
    }

    #[test]
    fn n2_ratio_shape() {
        assert_eq!(n2_ratio(1.0, 2), 1.0);
        // golden-section search for the interior minimum, k = 2
        let (mut a, mut b) = (1.0_f64, 10.0_f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if n2_ratio(c, 2) < n2_ratio(d, 2) {
                b = d;
            } else {
                a = c;
            }
        }
        let zmin = 0.5 * (a + b);
        assert!(zmin > 1.0 + 1e-3 && zmin < 10.0 - 1e-3);
        assert!(n2_ratio(zmin, 2) < 1.0);
        assert!(n2_ratio(1e6, 2) > 100.0);
    }

    #[test]
    fn feasibility_examples() {
        assert!(feasible(PhasePoint::new(0.5, 0.25, 2)).unwrap());
        assert!(!feasible(PhasePoint::new(0.5, 0.36, 2)).unwrap());
        assert!(feasible(PhasePoint::new(0.3, 0.16844286, 2)).unwrap());
        assert!(!feasible(PhasePoint::new(0.5, 0.2, 2)).unwrap());
        assert!(feasible(PhasePoint::new(0.5, 0.2, 40)).is_err());
    }

    #[test]
    fn realize_hits_targets() {
        for &(eps, tau, k) in &[(0.3, 0.16844286, 2), (0.5, 0.3, 2), (0.8, 0.6, 3), (0.1, 0.02, 2)] {
            let g = realize(PhasePoint::new(eps, tau, k)).unwrap();
            assert_abs_diff_eq!(g.edge_density(), eps, epsilon = 1e-14);
            assert_abs_diff_eq!(g.star_density(k), tau, epsilon = 1e-12);
        }
        assert!(realize(PhasePoint::new(0.5, 0.4, 2)).is_err());
    }
}
