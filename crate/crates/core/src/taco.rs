//! Edge, 2-star and 3-star densities together: the two boundary
//! inequalities, the complement involution on density triples, the Jacobian
//! positivity polynomial and a brute-force upper boundary built from tripodal
//! 0–1 graphons.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::graphon::StepGraphon;
use crate::phase::{crossing_point, BoundaryBranch, BranchKind};
use crate::report::{format_float, write_csv};
use crate::sampling::random_step_graphon;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TacoPoint {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl TacoPoint {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Self {
        Self { t1, t2, t3 }
    }

    pub fn of(g: &StepGraphon<f64>) -> Self {
        Self::new(g.edge_density(), g.star_density(2), g.star_density(3))
    }

    /// `t₃ − t₂²/t₁`; zero on the empty graphon, where it is undefined.
    pub fn u(&self) -> f64 {
        if self.t1 > 0.0 {
            self.t3 - self.t2 * self.t2 / self.t1
        } else {
            0.0
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.t2 - self.t1 * self.t1
    }
}

/// `t₁t₃ − t₂²`, nonnegative for realizable points.
pub fn cs_inequality(p: TacoPoint) -> f64 {
    p.t1 * p.t3 - p.t2 * p.t2
}

/// `(1−t₁)(1−3t₁+3t₂−t₃) − (1−2t₁+t₂)²`, the image of [`cs_inequality`]
/// under [`involution`].
pub fn dual_inequality(p: TacoPoint) -> f64 {
    (1.0 - p.t1) * (1.0 - 3.0 * p.t1 + 3.0 * p.t2 - p.t3) - (1.0 - 2.0 * p.t1 + p.t2).powi(2)
}

/// Densities of the complement graphon.
pub fn involution(p: TacoPoint) -> TacoPoint {
    TacoPoint::new(1.0 - p.t1, 1.0 - 2.0 * p.t1 + p.t2, 1.0 - 3.0 * p.t1 + 3.0 * p.t2 - p.t3)
}

/// `(a−1)²x₂⁴(a²x₂³ + 2a²x₃x₂² + 2ax₃²x₂ + x₃x₂² + x₃²x₂ + x₃³)`.
pub fn jacobian_poly(a: f64, x2: f64, x3: f64) -> f64 {
    (a - 1.0).powi(2)
        * x2.powi(4)
        * (a * a * x2.powi(3) + 2.0 * a * a * x3 * x2 * x2 + 2.0 * a * x3 * x3 * x2 + x3 * x2 * x2 + x3 * x3 * x2 + x3.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TacoFuzzReport {
    pub samples: usize,
    pub min_cs: f64,
    pub min_dual: f64,
    /// Largest gap between [`involution`] and the complement's densities.
    pub max_involution_error: f64,
}

/// Evaluates both inequalities and the involution identity on random step
/// graphons with 1 to 6 blocks.
pub fn fuzz_inequalities(samples: usize, seed: u64) -> TacoFuzzReport {
    let chunk = 256;
    let parts: Vec<(f64, f64, f64)> = (0..samples.div_ceil(chunk))
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(block as u64));
            let mut acc = (f64::INFINITY, f64::INFINITY, 0.0f64);
            for _ in 0..chunk.min(samples - block * chunk) {
                let k = 1 + (rand::Rng::random_range(&mut rng, 0..6));
                let g = random_step_graphon(&mut rng, k);
                let p = TacoPoint::of(&g);
                let q = involution(p);
                let direct = TacoPoint::of(&g.complement());
                let err = (q.t1 - direct.t1).abs().max((q.t2 - direct.t2).abs()).max((q.t3 - direct.t3).abs());
                acc = (acc.0.min(cs_inequality(p)), acc.1.min(dual_inequality(p)), acc.2.max(err));
            }
            acc
        })
        .collect();
    let (min_cs, min_dual, max_err) = parts
        .into_iter()
        .fold((f64::INFINITY, f64::INFINITY, 0.0f64), |a, b| (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2)));
    TacoFuzzReport { samples, min_cs, min_dual, max_involution_error: max_err }
}

/// Symmetric 3×3 0–1 matrix.
pub type Pattern = [[u8; 3]; 3];

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn is_doubly_monotone(m: &Pattern) -> bool {
    (0..2).all(|i| (0..3).all(|j| m[i][j] >= m[i + 1][j] && m[j][i] >= m[j][i + 1]))
}

/// Symmetric 0–1 patterns that become non-increasing along rows and columns
/// under some block ordering, listed once each in that monotone ordering.
pub fn monotone_patterns() -> Vec<Pattern> {
    let mut out: Vec<Pattern> = Vec::new();
    for bits in 0u32..64 {
        // upper triangle: (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
        let b = |i: u32| ((bits >> i) & 1) as u8;
        let m: Pattern = [[b(0), b(1), b(2)], [b(1), b(3), b(4)], [b(2), b(4), b(5)]];
        for perm in PERMUTATIONS {
            let p: Pattern = std::array::from_fn(|i| std::array::from_fn(|j| m[perm[i]][perm[j]]));
            if is_doubly_monotone(&p) {
                if !out.contains(&p) {
                    out.push(p);
                }
                break;
            }
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TacoSample {
    pub point: TacoPoint,
    pub family: usize,
}

/// Number of envelope bins along each of `t₁` and `t₃`.
pub const ENVELOPE_BINS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TacoBoundary {
    pub resolution: usize,
    pub patterns: Vec<Pattern>,
    pub cloud: Vec<TacoSample>,
    /// Largest-`t₂` sample of every non-empty `(t₁, t₃)` bin, by bin index.
    pub envelope: Vec<((usize, usize), TacoSample)>,
}

fn bin_of(p: TacoPoint) -> (usize, usize) {
    let idx = |v: f64| ((v * ENVELOPE_BINS as f64) as usize).min(ENVELOPE_BINS - 1);
    (idx(p.t1), idx(p.t3))
}

/// Densities of every monotone tripodal 0–1 pattern at every fraction vector
/// `(a, b, resolution − a − b)/resolution`, and the per-bin upper envelope.
pub fn boundary_bruteforce(resolution: usize) -> Result<TacoBoundary, String> {
    if resolution < 50 {
        return Err(format!("resolution must be at least 50, got {resolution}"));
    }
    let patterns = monotone_patterns();
    let r = resolution as f64;
    let cloud: Vec<TacoSample> = (0..=resolution)
        .into_par_iter()
        .flat_map_iter(|a| {
            let patterns = &patterns;
            (0..=resolution - a).flat_map(move |b| {
                let c = vec![a as f64 / r, b as f64 / r, (resolution - a - b) as f64 / r];
                patterns.iter().enumerate().map(move |(family, m)| {
                    let rows = m.iter().map(|row| row.iter().map(|&v| v as f64).collect()).collect();
                    let g = StepGraphon::new(c.clone(), rows).expect("0-1 pattern on the simplex");
                    TacoSample { point: TacoPoint::of(&g), family }
                })
            })
        })
        .collect();
    let mut best: std::collections::BTreeMap<(usize, usize), TacoSample> = std::collections::BTreeMap::new();
    for s in &cloud {
        let entry = best.entry(bin_of(s.point)).or_insert(*s);
        if s.point.t2 > entry.point.t2 {
            *entry = *s;
        }
    }
    Ok(TacoBoundary { resolution, patterns, cloud, envelope: best.into_iter().collect() })
}

impl TacoBoundary {
    pub const HEADER: [&'static str; 6] = ["t1", "t2", "t3", "u", "sigma2", "family_id"];

    fn rows(samples: impl Iterator<Item = TacoSample>) -> Vec<Vec<String>> {
        samples
            .map(|s| {
                let p = s.point;
                vec![
                    format_float(p.t1),
                    format_float(p.t2),
                    format_float(p.t3),
                    format_float(p.u()),
                    format_float(p.sigma2()),
                    s.family.to_string(),
                ]
            })
            .collect()
    }

    pub fn write_cloud_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_csv(out, &Self::HEADER, &Self::rows(self.cloud.iter().copied()))
    }

    pub fn write_envelope_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_csv(out, &Self::HEADER, &Self::rows(self.envelope.iter().map(|(_, s)| *s)))
    }

    /// Smallest values of the two inequalities over the envelope.
    pub fn envelope_inequalities(&self) -> (f64, f64) {
        self.envelope.iter().fold((f64::INFINITY, f64::INFINITY), |(a, b), (_, s)| {
            (a.min(cs_inequality(s.point)), b.min(dual_inequality(s.point)))
        })
    }

    /// Comparison of the `(t₁, σ²)` shadow of the cloud with the 2-star upper
    /// boundary over `bins` slices of `t₁`: returns the largest excess of any
    /// sample over the boundary and the largest per-slice shortfall of the
    /// best sample below it.
    pub fn projection_gap(&self, bins: usize) -> (f64, f64) {
        let eps0 = crossing_point(2).expect("k = 2 is verified");
        let mut excess = f64::NEG_INFINITY;
        let mut closest = vec![f64::INFINITY; bins];
        for s in &self.cloud {
            let p = s.point;
            let t1 = p.t1.clamp(0.0, 1.0);
            let kind = if t1 <= eps0 { BranchKind::Anticlique } else { BranchKind::Clique };
            let upper = BoundaryBranch { kind, k: 2 }.value(t1);
            excess = excess.max(p.t2 - upper);
            let bin = ((p.t1 * bins as f64) as usize).min(bins - 1);
            closest[bin] = closest[bin].min(upper - p.t2);
        }
        let shortfall = closest.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, &v| m.max(v));
        (excess, shortfall)
    }

    /// Largest `|Δt₂|` between the envelopes of `self` and `other` over the
    /// bins both populate, with the number of such bins.
    pub fn envelope_shift(&self, other: &TacoBoundary) -> (f64, usize) {
        let theirs: std::collections::HashMap<(usize, usize), f64> =
            other.envelope.iter().map(|(bin, s)| (*bin, s.point.t2)).collect();
        self.envelope
            .iter()
            .filter_map(|(bin, s)| theirs.get(bin).map(|t2| (s.point.t2 - t2).abs()))
            .fold((0.0f64, 0usize), |(m, n), d| (m.max(d), n + 1))
    }

    /// Largest amount by which random 4-podal 0–1 graphons exceed the
    /// envelope value of their bin (negative when all stay below).
    pub fn spot_check(&self, samples: usize, seed: u64) -> f64 {
        let lookup: std::collections::HashMap<(usize, usize), f64> =
            self.envelope.iter().map(|(bin, s)| (*bin, s.point.t2)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let g = random_step_graphon(&mut rng, 4);
            let rounded: Vec<f64> = g.values().iter().map(|v| v.round()).collect();
            let g = StepGraphon::from_flat(g.fractions().to_vec(), rounded).expect("0-1 values");
            let p = TacoPoint::of(&g);
            if let Some(&top) = lookup.get(&bin_of(p)) {
                worst = worst.max(p.t2 - top);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_point_is_on_both_faces() {
        for p in [0.2, 0.5, 0.9] {
            let er = TacoPoint::new(p, p * p, p * p * p);
            assert!(cs_inequality(er).abs() < 1e-15);
            assert!(dual_inequality(er).abs() < 1e-15);
        }
        assert!(cs_inequality(TacoPoint::new(0.5, 0.3, 0.1)) < 0.0);
    }

    #[test]
    fn involution_is_an_involution() {
        let p = TacoPoint::new(0.3, 0.12, 0.06);
        let q = involution(involution(p));
        assert!((q.t1 - p.t1).abs() < 1e-15 && (q.t2 - p.t2).abs() < 1e-15 && (q.t3 - p.t3).abs() < 1e-15);
        assert!((dual_inequality(p) - cs_inequality(involution(p))).abs() < 1e-14);
    }

    #[test]
    fn jacobian_values() {
        assert_eq!(jacobian_poly(1.0, 0.3, 0.2), 0.0);
        assert!(jacobian_poly(0.5, 0.25, 0.25) > 0.0);
    }

    #[test]
    fn small_fuzz() {
        let r = fuzz_inequalities(500, 1);
        assert!(r.min_cs >= -1e-12 && r.min_dual >= -1e-12);
        assert!(r.max_involution_error < 1e-14);
    }

    #[test]
    fn pattern_enumeration() {
        let pats = monotone_patterns();
        assert!(pats.contains(&[[0; 3]; 3]));
        assert!(pats.contains(&[[1; 3]; 3]));
        assert!(pats.iter().all(is_doubly_monotone));
        // self-conjugate Ferrers shapes inside a 3x3 box
        assert_eq!(pats.len(), 8);
    }

    #[test]
    fn bruteforce_envelope() {
        let b = boundary_bruteforce(60).unwrap();
        let (cs, dual) = b.envelope_inequalities();
        assert!(cs >= -1e-12 && dual >= -1e-12);
        let (excess, shortfall) = b.projection_gap(50);
        assert!(excess < 1e-12);
        assert!(shortfall < 0.02, "{shortfall}");
        assert!(boundary_bruteforce(10).is_err());
    }
}
