//! K-podal step graphons and their exact subgraph densities.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{powi, Real, Scalar};

/// Tolerance on `Σ c_i = 1`.
pub const FRACTION_SUM_TOL: f64 = 1e-12;
/// Largest asymmetry accepted (and averaged away) when reading serialized graphons.
pub const SYMMETRY_READ_TOL: f64 = 1e-12;
/// Slack for block values that drift outside `[0, 1]` by roundoff.
pub const VALUE_CLAMP_TOL: f64 = 1e-14;
/// Block count above which the O(K³) products run row-parallel.
const PARALLEL_BLOCKS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphonError {
    #[error("a step graphon needs at least one block")]
    Empty,
    #[error("value matrix is {rows}x{cols}, expected {k}x{k}")]
    Shape { k: usize, rows: usize, cols: usize },
    #[error("block fraction c[{index}] = {value} is negative")]
    NegativeFraction { index: usize, value: f64 },
    #[error("block fractions sum to {sum}, expected 1")]
    FractionSum { sum: f64 },
    #[error("value g[{i}][{j}] = {value} lies outside [0, 1]")]
    ValueOutOfRange { i: usize, j: usize, value: f64 },
    #[error("value matrix is not symmetric at ({i}, {j}): |g_ij - g_ji| = {gap}")]
    Asymmetric { i: usize, j: usize, gap: f64 },
    #[error("invalid tolerance {name} = {value}: must lie in (0, 0.1)")]
    Tolerance { name: &'static str, value: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("malformed graphon JSON: {0}")]
    Json(String),
}

/// Piecewise-constant symmetric graphon: block fractions `c` and a symmetric
/// K×K matrix of edge probabilities `g` (row-major).
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "GraphonRepr<T>",
    into = "GraphonRepr<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct StepGraphon<T> {
    c: Vec<T>,
    g: Vec<T>,
}

#[derive(Clone, Serialize, Deserialize)]
struct GraphonRepr<T> {
    c: Vec<T>,
    g: Vec<Vec<T>>,
}

impl<T: Scalar> From<StepGraphon<T>> for GraphonRepr<T> {
    fn from(s: StepGraphon<T>) -> Self {
        let g = (0..s.k()).map(|i| s.row(i).to_vec()).collect();
        GraphonRepr { c: s.c, g }
    }
}

impl<T: Scalar> TryFrom<GraphonRepr<T>> for StepGraphon<T> {
    type Error = GraphonError;

    fn try_from(r: GraphonRepr<T>) -> Result<Self, GraphonError> {
        let mut g = r.g;
        let k = g.len();
        if let Some(row) = g.iter().find(|row| row.len() != k) {
            return Err(GraphonError::Shape { k, rows: k, cols: row.len() });
        }
        let tol = T::lit(SYMMETRY_READ_TOL);
        for i in 0..k {
            for j in (i + 1)..k {
                let gap = (g[i][j] - g[j][i]).abs_val();
                if gap > tol {
                    return Err(GraphonError::Asymmetric { i, j, gap: gap.as_f64() });
                }
                let mean = (g[i][j] + g[j][i]) / T::int(2);
                g[i][j] = mean;
                g[j][i] = mean;
            }
        }
        StepGraphon::new(r.c, g)
    }
}

impl<T: Scalar> StepGraphon<T> {
    /// Builds a graphon from block fractions and a row-major value matrix.
    ///
    /// The matrix must be exactly symmetric with entries in `[0, 1]`, and the
    /// fractions must be non-negative and sum to one within 1e-12.
    pub fn new(c: Vec<T>, rows: Vec<Vec<T>>) -> Result<Self, GraphonError> {
        let k = c.len();
        if k == 0 {
            return Err(GraphonError::Empty);
        }
        if rows.len() != k {
            return Err(GraphonError::Shape {
                k,
                rows: rows.len(),
                cols: rows.first().map_or(0, Vec::len),
            });
        }
        let mut g = Vec::with_capacity(k * k);
        for row in &rows {
            if row.len() != k {
                return Err(GraphonError::Shape { k, rows: k, cols: row.len() });
            }
            g.extend_from_slice(row);
        }
        Self::from_flat(c, g)
    }

    /// Same as [`StepGraphon::new`] with a flat row-major matrix.
    pub fn from_flat(c: Vec<T>, g: Vec<T>) -> Result<Self, GraphonError> {
        let k = c.len();
        if k == 0 {
            return Err(GraphonError::Empty);
        }
        if g.len() != k * k {
            return Err(GraphonError::Shape { k, rows: g.len() / k.max(1), cols: k });
        }
        let mut sum = T::zero();
        for (index, &ci) in c.iter().enumerate() {
            if ci < T::zero() {
                return Err(GraphonError::NegativeFraction { index, value: ci.as_f64() });
            }
            sum += ci;
        }
        if (sum - T::one()).abs_val() > T::lit(FRACTION_SUM_TOL) {
            return Err(GraphonError::FractionSum { sum: sum.as_f64() });
        }
        for i in 0..k {
            for j in 0..k {
                let v = g[i * k + j];
                if v < T::zero() || v > T::one() {
                    return Err(GraphonError::ValueOutOfRange { i, j, value: v.as_f64() });
                }
                if j > i && g[j * k + i] != v {
                    let gap = (g[j * k + i] - v).abs_val().as_f64();
                    return Err(GraphonError::Asymmetric { i, j, gap });
                }
            }
        }
        Ok(Self { c, g })
    }

    /// Constant graphon `g ≡ p` with a single block.
    pub fn constant(p: T) -> Result<Self, GraphonError> {
        Self::new(vec![T::one()], vec![vec![p]])
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.c.len()
    }

    pub fn fractions(&self) -> &[T] {
        &self.c
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        self.g[i * self.k() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let k = self.k();
        &self.g[i * k..(i + 1) * k]
    }

    /// Row-major value matrix.
    pub fn values(&self) -> &[T] {
        &self.g
    }

    /// `d_i = Σ_j g_ij c_j`.
    pub fn degree_vector(&self) -> Vec<T> {
        (0..self.k())
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(&self.c)
                    .fold(T::zero(), |acc, (&g, &c)| acc + g * c)
            })
            .collect()
    }

    pub fn edge_density(&self) -> T {
        self.c
            .iter()
            .zip(self.degree_vector())
            .fold(T::zero(), |acc, (&c, d)| acc + c * d)
    }

    /// `t_k = Σ_i c_i d_i^k`; `k = 1` is the edge density.
    pub fn star_density(&self, k: u32) -> T {
        self.c
            .iter()
            .zip(self.degree_vector())
            .fold(T::zero(), |acc, (&c, d)| acc + c * powi(d, k))
    }

    /// Homomorphism density of the path with three edges.
    pub fn chain3_density(&self) -> T {
        let d = self.degree_vector();
        let k = self.k();
        let mut total = T::zero();
        for x in 0..k {
            let mut inner = T::zero();
            for y in 0..k {
                inner += self.value(x, y) * self.c[y] * d[y];
            }
            total += self.c[x] * d[x] * inner;
        }
        total
    }

    /// Homomorphism density of the 4-cycle, `Σ_ij c_i c_j P_ij²` with
    /// `P_ij = Σ_m g_im c_m g_mj`.
    pub fn cycle4_density(&self) -> T {
        let p = self.two_path_matrix();
        let k = self.k();
        let mut total = T::zero();
        for i in 0..k {
            for j in 0..k {
                let v = p[i * k + j];
                total += self.c[i] * self.c[j] * v * v;
            }
        }
        total
    }

    /// Signed quadrilateral density `t₁² − 2·chain3 + cycle4`.
    pub fn signed_quad_density(&self) -> T {
        let t1 = self.edge_density();
        t1 * t1 - T::int(2) * self.chain3_density() + self.cycle4_density()
    }

    /// Signed quadrilateral density evaluated directly from its integrand
    /// `g(w,x)(1−g(x,y))g(y,z)(1−g(w,z))`, i.e. `tr((GC)(BC)(GC)(BC))` with
    /// `B = 1 − G`.
    pub fn signed_quad_density_direct(&self) -> T {
        let k = self.k();
        // n = (G C)(B C)
        let mut n = vec![T::zero(); k * k];
        let fill_row = |i: usize, out: &mut [T]| {
            for m in 0..k {
                let w = self.value(i, m) * self.c[m];
                for ((o, &v), &cj) in out.iter_mut().zip(self.row(m)).zip(&self.c) {
                    *o += w * (T::one() - v) * cj;
                }
            }
        };
        if k >= PARALLEL_BLOCKS {
            n.par_chunks_mut(k).enumerate().for_each(|(i, out)| fill_row(i, out));
        } else {
            n.chunks_mut(k).enumerate().for_each(|(i, out)| fill_row(i, out));
        }
        let mut total = T::zero();
        for i in 0..k {
            for j in 0..k {
                total += n[i * k + j] * n[j * k + i];
            }
        }
        total
    }

    /// `P_ij = Σ_m g_im c_m g_mj` (row-major).
    pub(crate) fn two_path_matrix(&self) -> Vec<T> {
        let k = self.k();
        let mut p = vec![T::zero(); k * k];
        let fill_row = |i: usize, out: &mut [T]| {
            for m in 0..k {
                let w = self.value(i, m) * self.c[m];
                if w == T::zero() {
                    continue;
                }
                for (o, &v) in out.iter_mut().zip(self.row(m)) {
                    *o += w * v;
                }
            }
        };
        if k >= PARALLEL_BLOCKS {
            p.par_chunks_mut(k).enumerate().for_each(|(i, out)| fill_row(i, out));
        } else {
            p.chunks_mut(k).enumerate().for_each(|(i, out)| fill_row(i, out));
        }
        p
    }

    pub fn density(&self, functional: DensityFunctional) -> T {
        match functional {
            DensityFunctional::Edge => self.edge_density(),
            DensityFunctional::KStar(k) => self.star_density(k),
            DensityFunctional::Chain3 => self.chain3_density(),
            DensityFunctional::Cycle4 => self.cycle4_density(),
            DensityFunctional::SignedQuad => self.signed_quad_density(),
        }
    }

    pub fn densities(&self, functionals: &[DensityFunctional]) -> DensityVector<T> {
        DensityVector {
            entries: functionals.iter().map(|&f| (f, self.density(f))).collect(),
        }
    }

    /// The graphon `1 − g` on the same partition.
    pub fn complement(&self) -> Self {
        Self {
            c: self.c.clone(),
            g: self.g.iter().map(|&v| T::one() - v).collect(),
        }
    }

    /// Reorders blocks: block `i` of the result is block `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let k = self.k();
        assert_eq!(order.len(), k, "permutation length");
        let c = order.iter().map(|&i| self.c[i]).collect();
        let mut g = Vec::with_capacity(k * k);
        for &i in order {
            for &j in order {
                g.push(self.value(i, j));
            }
        }
        Self { c, g }
    }

    /// Converts the scalar type, e.g. exact rationals to `f64`.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> StepGraphon<U> {
        StepGraphon {
            c: self.c.iter().map(|&v| f(v)).collect(),
            g: self.g.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Unchecked constructor for internal callers that maintain the invariants.
    pub(crate) fn from_parts_unchecked(c: Vec<T>, g: Vec<T>) -> Self {
        debug_assert_eq!(g.len(), c.len() * c.len());
        Self { c, g }
    }
}

impl<T: Real> StepGraphon<T> {
    /// Shannon entropy density `−½ Σ_ij c_i c_j [g ln g + (1−g) ln(1−g)]`.
    pub fn shannon_entropy(&self) -> T {
        let k = self.k();
        let mut total = T::zero();
        for i in 0..k {
            for j in 0..k {
                total += self.c[i] * self.c[j] * bernoulli_entropy(self.value(i, j));
            }
        }
        total / T::int(2)
    }
}

impl<T: Scalar> fmt::Debug for StepGraphon<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = (0..self.k()).map(|i| self.row(i)).collect();
        f.debug_struct("StepGraphon").field("c", &self.c).field("g", &rows).finish()
    }
}

impl StepGraphon<f64> {
    pub fn from_json_str(s: &str) -> Result<Self, GraphonError> {
        serde_json::from_str(s).map_err(|e| GraphonError::Json(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("graphon serializes")
    }
}

/// `S(w) = −w ln w − (1−w) ln(1−w)` with `0·ln 0 = 0`; inputs within 1e-14
/// of `[0, 1]` are clamped.
pub fn bernoulli_entropy<T: Real>(w: T) -> T {
    let tol = T::lit(VALUE_CLAMP_TOL);
    let w = if w < T::zero() && w > -tol {
        T::zero()
    } else if w > T::one() && w < T::one() + tol {
        T::one()
    } else {
        w
    };
    let xlogx = |x: T| if x <= T::zero() { T::zero() } else { x * x.ln() };
    -(xlogx(w) + xlogx(T::one() - w))
}

/// `S'(w) = ln((1−w)/w)`.
pub fn bernoulli_entropy_d1<T: Real>(w: T) -> T {
    ((T::one() - w) / w).ln()
}

/// `S''(w) = −1/(w(1−w))`.
pub fn bernoulli_entropy_d2<T: Real>(w: T) -> T {
    -T::one() / (w * (T::one() - w))
}

/// Subgraph whose homomorphism density is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DensityFunctional {
    Edge,
    /// k-star with `k ≥ 2` leaves.
    KStar(u32),
    Chain3,
    Cycle4,
    SignedQuad,
}

impl DensityFunctional {
    pub fn kstar(k: u32) -> Result<Self, GraphonError> {
        match k {
            0 => Err(GraphonError::Argument("star order must be at least 1".into())),
            1 => Ok(Self::Edge),
            k => Ok(Self::KStar(k)),
        }
    }

    /// Every functional with stars up to `max_star`.
    pub fn standard_set(max_star: u32) -> Vec<Self> {
        let mut v = vec![Self::Edge];
        v.extend((2..=max_star).map(Self::KStar));
        v.extend([Self::Chain3, Self::Cycle4, Self::SignedQuad]);
        v
    }
}

impl fmt::Display for DensityFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Edge => write!(f, "t1"),
            Self::KStar(k) => write!(f, "t{k}"),
            Self::Chain3 => write!(f, "chain3"),
            Self::Cycle4 => write!(f, "cycle4"),
            Self::SignedQuad => write!(f, "tq"),
        }
    }
}

impl FromStr for DensityFunctional {
    type Err = GraphonError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "t1" | "edge" => Ok(Self::Edge),
            "chain3" => Ok(Self::Chain3),
            "cycle4" => Ok(Self::Cycle4),
            "tq" | "signed_quad" => Ok(Self::SignedQuad),
            _ => {
                let k = s
                    .strip_prefix('t')
                    .and_then(|rest| rest.parse::<u32>().ok())
                    .ok_or_else(|| GraphonError::Argument(format!("unknown density functional `{s}`")))?;
                Self::kstar(k)
            }
        }
    }
}

impl Serialize for DensityFunctional {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DensityFunctional {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered list of density values.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector<T> {
    pub entries: Vec<(DensityFunctional, T)>,
}

impl<T: Scalar> DensityVector<T> {
    pub fn get(&self, functional: DensityFunctional) -> Option<T> {
        self.entries.iter().find(|(f, _)| *f == functional).map(|&(_, v)| v)
    }

    pub fn values(&self) -> Vec<T> {
        self.entries.iter().map(|&(_, v)| v).collect()
    }
}

impl<T: Scalar + Serialize> Serialize for DensityVector<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (f, v) in &self.entries {
            map.serialize_entry(&f.to_string(), v)?;
        }
        map.end()
    }
}

/// Equal-block discretization of the half-plane graphon `1{x + y > 1}`: each
/// cell holds the exact area fraction of `{x + y > 1}` inside it (0, 1/2 on
/// the anti-diagonal, or 1).
pub fn discretize_halfplane<T: Scalar>(n: usize) -> Result<StepGraphon<T>, GraphonError> {
    if n < 2 {
        return Err(GraphonError::Argument(format!("half-plane discretization needs n >= 2, got {n}")));
    }
    let half = T::one() / T::int(2);
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            // 0-indexed: anti-diagonal is i + j = n - 1
            g.push(match (i + j).cmp(&(n - 1)) {
                std::cmp::Ordering::Less => T::zero(),
                std::cmp::Ordering::Equal => half,
                std::cmp::Ordering::Greater => T::one(),
            });
        }
    }
    let c = equal_fractions(n);
    Ok(StepGraphon::from_parts_unchecked(c, g))
}

/// `n` equal fractions; the last one absorbs rounding so they sum to one.
pub(crate) fn equal_fractions<T: Scalar>(n: usize) -> Vec<T> {
    let each = T::one() / T::from_usize(n).expect("block count representable");
    let mut c = vec![each; n];
    let rest = c[..n - 1].iter().fold(T::zero(), |acc, &v| acc + v);
    c[n - 1] = T::one() - rest;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_rational::Rational64;

    fn anticlique(c: f64) -> StepGraphon<f64> {
        StepGraphon::new(vec![c, 1.0 - c], vec![vec![1.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn degree_vector_examples() {
        let g = StepGraphon::new(vec![0.2, 0.8], vec![vec![0.4, 0.4], vec![0.4, 0.4]]).unwrap();
        for d in g.degree_vector() {
            assert_abs_diff_eq!(d, 0.4, epsilon = 1e-15);
        }
        let half = StepGraphon::new(vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(half.degree_vector(), vec![0.5, 0.0]);
        let d = anticlique(0.3).degree_vector();
        assert_abs_diff_eq!(d[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.3, epsilon = 1e-15);
    }

    #[test]
    fn anticlique_edge_density_round_trip() {
        let eps = 0.19;
        let c = 1.0 - (1.0 - eps as f64).sqrt();
        assert_abs_diff_eq!(anticlique(c).edge_density(), eps, epsilon = 1e-14);
    }

    #[test]
    fn constant_graphon_densities() {
        let p: f64 = 0.37;
        let g = StepGraphon::constant(p).unwrap();
        assert_abs_diff_eq!(g.edge_density(), p, epsilon = 1e-15);
        assert_abs_diff_eq!(g.star_density(2), p * p, epsilon = 1e-15);
        assert_abs_diff_eq!(g.chain3_density(), p.powi(3), epsilon = 1e-15);
        assert_abs_diff_eq!(g.cycle4_density(), p.powi(4), epsilon = 1e-15);
        let tq = p * p * (1.0 - p) * (1.0 - p);
        assert_abs_diff_eq!(g.signed_quad_density(), tq, epsilon = 1e-15);
        assert_abs_diff_eq!(g.signed_quad_density_direct(), tq, epsilon = 1e-15);
    }

    #[test]
    fn clique_and_anticlique_star_densities() {
        let eps: f64 = 0.36;
        let c = eps.sqrt();
        let clique = StepGraphon::new(vec![c, 1.0 - c], vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        for k in 2..7 {
            assert_abs_diff_eq!(clique.star_density(k), eps.powf((k as f64 + 1.0) / 2.0), epsilon = 1e-14);
            let a: f64 = 0.27;
            let expected = a + a.powi(k as i32) - a.powi(k as i32 + 1);
            assert_abs_diff_eq!(anticlique(a).star_density(k), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn block_diagonal_cycle4() {
        let g = StepGraphon::new(vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(g.cycle4_density(), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn entropy_examples() {
        let half = StepGraphon::constant(0.5).unwrap();
        assert_abs_diff_eq!(half.shannon_entropy(), std::f64::consts::LN_2 / 2.0, epsilon = 1e-15);
        let zero_one = StepGraphon::new(vec![0.4, 0.6], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(zero_one.shannon_entropy(), 0.0);
        let p = StepGraphon::constant(0.3).unwrap();
        let expected = 0.5 * (-0.3 * 0.3f64.ln() - 0.7 * 0.7f64.ln());
        assert_abs_diff_eq!(p.shannon_entropy(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(p.shannon_entropy(), 0.305_43, epsilon = 1e-5);
    }

    #[test]
    fn complement_examples() {
        let g = StepGraphon::new(vec![0.25, 0.75], vec![vec![0.875, 0.25], vec![0.25, 0.5]]).unwrap();
        assert_eq!(g.complement().complement(), g);
        let p = StepGraphon::constant(0.2).unwrap();
        assert_abs_diff_eq!(p.complement().value(0, 0), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(p.complement().shannon_entropy(), p.shannon_entropy(), epsilon = 1e-15);
    }

    #[test]
    fn complement_of_bipodal_point() {
        // mix an anticlique with the constant graphon on the same partition
        // until the 2-star density reaches 0.16 at edge density 0.3
        let eps: f64 = 0.3;
        let c = 1.0 - (1.0 - eps).sqrt();
        let mix = |a: f64| {
            let hi = a + (1.0 - a) * eps;
            let lo = (1.0 - a) * eps;
            StepGraphon::new(vec![c, 1.0 - c], vec![vec![hi, hi], vec![hi, lo]]).unwrap()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mix(mid).star_density(2) < 0.16 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let g = mix(lo);
        assert_abs_diff_eq!(g.edge_density(), 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(g.star_density(2), 0.16, epsilon = 1e-14);
        let h = g.complement();
        assert_abs_diff_eq!(h.edge_density(), 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(h.star_density(2), 0.56, epsilon = 1e-14);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(matches!(StepGraphon::<f64>::new(vec![], vec![]), Err(GraphonError::Empty)));
        assert!(matches!(
            StepGraphon::new(vec![0.5, 0.6], vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
            Err(GraphonError::FractionSum { .. })
        ));
        assert!(matches!(
            StepGraphon::new(vec![0.5, 0.5], vec![vec![0.0, 0.1], vec![0.2, 0.0]]),
            Err(GraphonError::Asymmetric { .. })
        ));
        assert!(matches!(
            StepGraphon::new(vec![1.0], vec![vec![1.5]]),
            Err(GraphonError::ValueOutOfRange { .. })
        ));
        assert!(matches!(
            StepGraphon::new(vec![1.2, -0.2], vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
            Err(GraphonError::NegativeFraction { .. })
        ));
    }

    #[test]
    fn json_reader_symmetrizes_tiny_gaps_and_rejects_large_ones() {
        let ok = r#"{"c":[0.5,0.5],"g":[[0.1,0.2],[0.2000000000000001,0.3]]}"#;
        let g = StepGraphon::from_json_str(ok).unwrap();
        assert_eq!(g.value(0, 1), g.value(1, 0));
        let bad = r#"{"c":[0.5,0.5],"g":[[0.1,0.2],[0.21,0.3]]}"#;
        assert!(StepGraphon::from_json_str(bad).is_err());
        let back = StepGraphon::from_json_str(&g.to_json_string()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn halfplane_small_cases_are_exact() {
        let g = discretize_halfplane::<Rational64>(2).unwrap();
        let half = Rational64::new(1, 2);
        assert_eq!(g.row(0), &[Rational64::from_integer(0), half]);
        assert_eq!(g.row(1), &[half, Rational64::from_integer(1)]);
        for n in 2..12 {
            let g = discretize_halfplane::<Rational64>(n).unwrap();
            assert_eq!(g.edge_density(), half);
        }
        assert!(discretize_halfplane::<f64>(1).is_err());
    }

    #[test]
    fn halfplane_converges_to_triangle_graphon_densities() {
        let g = discretize_halfplane::<f64>(512).unwrap();
        assert_abs_diff_eq!(g.edge_density(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g.star_density(2), 1.0 / 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(g.chain3_density(), 5.0 / 24.0, epsilon = 1e-3);
        assert_abs_diff_eq!(g.cycle4_density(), 1.0 / 6.0, epsilon = 1e-3);
        assert_abs_diff_eq!(g.signed_quad_density(), 0.0, epsilon = 2e-3);
    }

    #[test]
    fn functional_names_round_trip() {
        for f in DensityFunctional::standard_set(4) {
            assert_eq!(f.to_string().parse::<DensityFunctional>().unwrap(), f);
        }
        assert_eq!("t1".parse::<DensityFunctional>().unwrap(), DensityFunctional::Edge);
        assert!("t0".parse::<DensityFunctional>().is_err());
        assert!("foo".parse::<DensityFunctional>().is_err());
    }
}
