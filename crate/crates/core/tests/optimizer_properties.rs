use stargraph::optimize::{
    bipodal_identity_residual, el_residual_2star, maximize_entropy, ConstraintSet, OptimizerConfig,
};
use stargraph::phase::{realize, upper_boundary, PhasePoint};

fn cfg() -> OptimizerConfig {
    OptimizerConfig { k_max: 4, ..OptimizerConfig::default() }
}

/// Interior 2-star targets away from both boundaries.
fn interior_points() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for eps in [0.2, 0.35, 0.5, 0.65, 0.8] {
        let lower = eps * eps;
        let upper = upper_boundary(eps, 2).unwrap();
        for frac in [0.15, 0.5, 0.85] {
            out.push((eps, lower + frac * (upper - lower)));
        }
    }
    out
}

#[test]
fn maximizers_meet_targets_and_bounds() {
    let config = cfg();
    for (eps, tau) in interior_points() {
        let cs = ConstraintSet::edge_star(eps, 2, tau).unwrap();
        let r = maximize_entropy(&cs, &config).unwrap();
        assert!(r.residuals.iter().all(|&v| v <= config.constraint_tol), "({eps}, {tau}): {:?}", r.residuals);
        assert!(r.entropy <= std::f64::consts::LN_2 / 2.0 + 1e-15);
        let seed = realize(PhasePoint::new(eps, tau, 2)).unwrap();
        assert!(r.entropy >= seed.shannon_entropy() - 1e-12, "({eps}, {tau})");
    }
}

#[test]
fn two_star_interior_is_bipodal_with_richer_block_first() {
    let config = cfg();
    for (eps, tau) in interior_points() {
        let cs = ConstraintSet::edge_star(eps, 2, tau).unwrap();
        let r = maximize_entropy(&cs, &config).unwrap();
        assert_eq!(r.podality, 2, "({eps}, {tau}): {:?}", r.graphon);
        let g = &r.graphon;
        assert!(g.value(0, 0) >= g.value(1, 1), "({eps}, {tau}): {g:?}");
        assert!(el_residual_2star(&r).unwrap().residual < 1e-6, "({eps}, {tau})");
        assert!(bipodal_identity_residual(g).unwrap() < 1e-6, "({eps}, {tau})");
    }
}

#[test]
fn complement_covariance() {
    let config = cfg();
    for (eps, tau) in [(0.3, 0.12), (0.4, 0.2), (0.45, 0.28), (0.2, 0.1)] {
        let a = maximize_entropy(&ConstraintSet::edge_star(eps, 2, tau).unwrap(), &config).unwrap();
        let mirrored = ConstraintSet::edge_star(1.0 - eps, 2, 1.0 - 2.0 * eps + tau).unwrap();
        let b = maximize_entropy(&mirrored, &config).unwrap();
        assert!((a.entropy - b.entropy).abs() < 1e-6, "({eps}, {tau}): {} vs {}", a.entropy, b.entropy);
    }
}

#[test]
fn infeasible_targets_are_rejected() {
    let cs = ConstraintSet::edge_star(0.5, 2, 0.2).unwrap();
    assert!(maximize_entropy(&cs, &cfg()).is_err());
}
