mod common;

use common::{brute_hom, central_difference, relative_error, sampling_errors, star_edges, CHAIN3, CYCLE4};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stargraph::canonical::{canonicalize, DEFAULT_DROP_TOL, DEFAULT_MERGE_TOL};
use stargraph::optimize::gradient::functional_gradient;
use stargraph::optimize::{analytic_gradients, ConstraintSet, Functional, Parametrization};
use stargraph::sampling::{graph_star_density, random_step_graphon, sample_graph};
use stargraph::{DensityFunctional, Graphon, StepGraphon};

fn graphon_strategy(max_k: usize) -> impl Strategy<Value = Graphon> {
    (1..=max_k).prop_flat_map(|k| {
        (prop::collection::vec(0.05f64..1.0, k), prop::collection::vec(0.0f64..=1.0, k * k)).prop_map(move |(w, v)| {
            let total: f64 = w.iter().sum();
            let mut c: Vec<f64> = w.iter().map(|x| x / total).collect();
            let head: f64 = c[..k - 1].iter().sum();
            c[k - 1] = 1.0 - head;
            let mut rows = vec![vec![0.0; k]; k];
            for i in 0..k {
                for j in i..k {
                    rows[i][j] = v[i * k + j];
                    rows[j][i] = v[i * k + j];
                }
            }
            StepGraphon::new(c, rows).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn densities_match_multi_index_sums(g in graphon_strategy(5)) {
        for k in 1..=4u32 {
            let brute = brute_hom(&g, k as usize + 1, &star_edges(k as usize));
            prop_assert!((g.star_density(k) - brute).abs() < 1e-12, "t{k}");
        }
        let chain = brute_hom(&g, 4, &CHAIN3);
        prop_assert!((g.chain3_density() - chain).abs() < 1e-12);
        let cycle = brute_hom(&g, 4, &CYCLE4);
        prop_assert!((g.cycle4_density() - cycle).abs() < 1e-12);
    }

    #[test]
    fn signed_quad_paths_agree(g in graphon_strategy(6)) {
        let t1 = g.edge_density();
        let combined = t1 * t1 - 2.0 * g.chain3_density() + g.cycle4_density();
        prop_assert!((g.signed_quad_density_direct() - combined).abs() < 1e-12);
    }

    #[test]
    fn complement_transforms(g in graphon_strategy(6)) {
        let h = g.complement();
        let (t1, t2, t3) = (g.edge_density(), g.star_density(2), g.star_density(3));
        prop_assert!((h.edge_density() - (1.0 - t1)).abs() < 1e-12);
        prop_assert!((h.star_density(2) - (1.0 - 2.0 * t1 + t2)).abs() < 1e-12);
        prop_assert!((h.star_density(3) - (1.0 - 3.0 * t1 + 3.0 * t2 - t3)).abs() < 1e-12);
    }

    #[test]
    fn entropy_invariances(g in graphon_strategy(6), shift in 0usize..6) {
        let s = g.shannon_entropy();
        prop_assert!((g.complement().shannon_entropy() - s).abs() < 1e-15);
        let k = g.k();
        let order: Vec<usize> = (0..k).map(|i| (i + shift) % k).rev().collect();
        prop_assert!((g.permuted(&order).shannon_entropy() - s).abs() < 1e-15);
    }

    #[test]
    fn holder_lower_bound(g in graphon_strategy(6), k in 2u32..12) {
        prop_assert!(g.star_density(k) >= g.edge_density().powi(k as i32) - 1e-15);
    }

    #[test]
    fn canonicalize_preserves_densities(g in graphon_strategy(4), noise in prop::collection::vec(-1.0f64..1.0, 25)) {
        // split block 0 into two copies that differ by less than the merge tolerance
        let k = g.k();
        let n = k + 1;
        let src = |i: usize| if i == k { 0 } else { i };
        let mut c = g.fractions().to_vec();
        c[0] *= 0.5;
        c.push(c[0]);
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let jitter = 0.4 * DEFAULT_MERGE_TOL * noise[(i * n + j) % noise.len()];
                let v = (g.value(src(i), src(j)) + jitter).clamp(0.0, 1.0);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let split = StepGraphon::new(c, rows).unwrap();
        let canon = canonicalize(&split, DEFAULT_MERGE_TOL, DEFAULT_DROP_TOL).unwrap();
        prop_assert!(canon.k() <= k);
        for f in DensityFunctional::standard_set(4) {
            prop_assert!((canon.density(f) - split.density(f)).abs() < 10.0 * DEFAULT_MERGE_TOL, "{f}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parameter_gradients_match_finite_differences(
        k in 1usize..=5,
        raw in prop::collection::vec(-2.0f64..2.0, 20),
    ) {
        let param = Parametrization::new(k);
        let theta: Vec<f64> = raw.iter().cycle().take(param.dim()).copied().collect();
        let cs: ConstraintSet = "t1=0.5,t3=0.2,chain3=0.1,cycle4=0.1,tq=0.01,zeta1=0.01".parse().unwrap();
        let grads = analytic_gradients(&theta, k, &cs);
        let entropy_fd = central_difference(&theta, |t| param.graphon(t).shannon_entropy());
        prop_assert!(relative_error(&grads.entropy, &entropy_fd) < 1e-5);
        for (item, analytic) in cs.items().iter().zip(&grads.constraints) {
            let fd = central_difference(&theta, |t| item.functional.evaluate(&param.graphon(t)));
            prop_assert!(relative_error(analytic, &fd) < 1e-5, "{}", item.functional);
        }
    }

    #[test]
    fn graphon_gradients_match_finite_differences(g in graphon_strategy(5)) {
        let k = g.k();
        for f in [Functional::Density(DensityFunctional::KStar(3)), Functional::Density(DensityFunctional::Cycle4), Functional::Zeta1] {
            let grad = functional_gradient(&g, f);
            for i in 0..k {
                for j in i..k {
                    let h = 1e-6;
                    let shifted = |delta: f64| {
                        let mut v = g.values().to_vec();
                        v[i * k + j] += delta;
                        if i != j {
                            v[j * k + i] += delta;
                        }
                        StepGraphon::from_flat(g.fractions().to_vec(), v).map(|h| f.evaluate(&h))
                    };
                    let (Ok(up), Ok(dn)) = (shifted(h), shifted(-h)) else { continue };
                    let fd = (up - dn) / (2.0 * h);
                    let weight = if i == j { 1.0 } else { 2.0 };
                    let analytic = weight * grad.dg[i * k + j];
                    prop_assert!((analytic - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "{f} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn sampled_densities_within_four_standard_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = 2000;
    for case in 0..20 {
        let g = random_step_graphon(&mut rng, 2 + case % 2);
        let graph = sample_graph(&g, n, 100 + case as u64);
        let (se1, se2) = sampling_errors(&g, n);
        let e1 = (graph_star_density(&graph, 1) - g.edge_density()).abs();
        let e2 = (graph_star_density(&graph, 2) - g.star_density(2)).abs();
        assert!(e1 < 4.0 * se1, "case {case}: t1 off by {e1}, se {se1}");
        assert!(e2 < 4.0 * se2, "case {case}: t2 off by {e2}, se {se2}");
    }
}

#[test]
fn sampling_error_shrinks_with_n() {
    let g = StepGraphon::new(vec![0.4, 0.6], vec![vec![0.8, 0.3], vec![0.3, 0.5]]).unwrap();
    let mean_error = |n: usize| {
        (0..8)
            .map(|s| (graph_star_density(&sample_graph(&g, n, s), 2) - g.star_density(2)).abs())
            .sum::<f64>()
            / 8.0
    };
    let (small, large) = (mean_error(250), mean_error(2000));
    // eightfold n should cut the error by about sqrt(8)
    assert!(large < small / 1.5, "{small} -> {large}");
}
