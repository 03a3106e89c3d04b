//! Deterministic starting points for the multi-start solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::constraints::ConstraintSet;
use super::gradient::Parametrization;
use crate::graphon::{DensityFunctional, StepGraphon};
use crate::phase::{anticlique_graphon, clique_graphon, realize, PhasePoint};

/// Distance of structured seeds from the 0/1 boundary.
pub const INTERIOR_OFFSET: f64 = 1e-3;

pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn interior(g: &StepGraphon<f64>) -> StepGraphon<f64> {
    let values = g.values().iter().map(|v| v.clamp(INTERIOR_OFFSET, 1.0 - INTERIOR_OFFSET)).collect();
    StepGraphon::from_parts_unchecked(g.fractions().to_vec(), values)
}

/// Graphon seeds suggested by the constraint set, before resizing to `K`.
fn structured_seeds(cs: &ConstraintSet) -> Vec<StepGraphon<f64>> {
    let eps = cs.target(DensityFunctional::Edge.into()).unwrap_or(0.5);
    let eps_inner = eps.clamp(INTERIOR_OFFSET, 1.0 - INTERIOR_OFFSET);
    let mut seeds = vec![StepGraphon::constant(eps_inner).expect("value in range")];
    if let Ok(g) = clique_graphon(eps) {
        seeds.push(interior(&g));
    }
    if let Ok(g) = anticlique_graphon(eps) {
        seeds.push(interior(&g));
    }
    if let Some((eps, k, tau)) = cs.as_edge_star() {
        if k == 2 && tau > eps * eps {
            let nu = 2.0 * (tau - eps * eps).sqrt();
            let g = StepGraphon::new(vec![0.5, 0.5], vec![vec![eps + nu, eps], vec![eps, eps - nu]]);
            if let Ok(g) = g.map(|g| interior(&g)) {
                seeds.push(g);
            }
        }
        if let Ok(g) = realize(PhasePoint::new(eps, tau, k)) {
            seeds.push(interior(&g));
        }
    }
    seeds
}

/// Resizes `g` to exactly `k` blocks: heavy blocks are split in halves, or the
/// closest pairs of rows are merged, then every value is jittered by up to
/// `INTERIOR_OFFSET` so split copies can separate.
pub(crate) fn fit_blocks(g: &StepGraphon<f64>, k: usize, rng: &mut ChaCha8Rng) -> StepGraphon<f64> {
    let mut c = g.fractions().to_vec();
    let mut rows: Vec<Vec<f64>> = (0..g.k()).map(|i| g.row(i).to_vec()).collect();
    while c.len() < k {
        let (heavy, _) = c
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        c[heavy] *= 0.5;
        c.push(c[heavy]);
        for row in rows.iter_mut() {
            row.push(row[heavy]);
        }
        let copy = rows[heavy].clone();
        rows.push(copy);
    }
    while c.len() > k {
        let n = c.len();
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..n {
            for b in (a + 1)..n {
                let dist = rows[a].iter().zip(&rows[b]).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                if dist < best.2 {
                    best = (a, b, dist);
                }
            }
        }
        let (a, b, _) = best;
        let (ca, cb) = (c[a], c[b]);
        let total = ca + cb;
        let diag = (ca * ca * rows[a][a] + 2.0 * ca * cb * rows[a][b] + cb * cb * rows[b][b]) / (total * total);
        let mut merged: Vec<f64> = (0..n).map(|m| (ca * rows[a][m] + cb * rows[b][m]) / total).collect();
        merged[a] = diag;
        for m in 0..n {
            rows[m][a] = merged[m];
        }
        rows[a] = merged;
        c[a] = total;
        c.remove(b);
        rows.remove(b);
        rows.iter_mut().for_each(|r| {
            r.remove(b);
        });
    }
    let mut flat = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let jitter = if k > 1 { INTERIOR_OFFSET * rng.random_range(-1.0..1.0) } else { 0.0 };
            let v = (rows[i][j] + jitter).clamp(INTERIOR_OFFSET, 1.0 - INTERIOR_OFFSET);
            flat[i * k + j] = v;
            flat[j * k + i] = v;
        }
    }
    let total: f64 = c.iter().sum();
    c.iter_mut().for_each(|v| *v /= total);
    StepGraphon::from_parts_unchecked(c, flat)
}

/// Starting parameters for `k` blocks: the constant graphon at the edge
/// target, interior clique and anticlique patterns, the symmetric bipodal
/// graphon for edge/2-star targets, a realizing mixture for edge/k-star
/// targets, then random parameters. `k = 1` gets the constant seed only.
pub fn initializers(cs: &ConstraintSet, k: usize, restarts: usize, seed: u64) -> Vec<Vec<f64>> {
    initializers_with(cs, k, restarts, seed, &[])
}

/// As [`initializers`], with `extra` graphon seeds placed after the
/// structured ones.
pub fn initializers_with(
    cs: &ConstraintSet,
    k: usize,
    restarts: usize,
    seed: u64,
    extra: &[StepGraphon<f64>],
) -> Vec<Vec<f64>> {
    let param = Parametrization::new(k);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, k as u64, 0));
    let mut graphons = structured_seeds(cs);
    graphons.extend(extra.iter().cloned());
    if k == 1 {
        graphons.truncate(1);
        return graphons.iter().map(|g| param.encode(&fit_blocks(g, 1, &mut rng))).collect();
    }
    let mut out: Vec<Vec<f64>> = graphons
        .iter()
        .take(restarts)
        .map(|g| param.encode(&fit_blocks(g, k, &mut rng)))
        .collect();
    while out.len() < restarts {
        let theta = (0..param.dim())
            .map(|i| {
                if i < k - 1 {
                    rng.sample::<f64, _>(StandardNormal)
                } else {
                    rng.random_range(-3.0..3.0)
                }
            })
            .collect();
        out.push(theta);
    }
    out
}
