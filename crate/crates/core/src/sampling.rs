//! Finite random graphs drawn from a step graphon, used as an independent
//! Monte-Carlo check on the analytic densities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graphon::StepGraphon;

/// Simple labeled graph stored as a symmetric bit matrix with zero diagonal.
#[derive(Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    n: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl LabeledGraph {
    pub fn empty(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        Self { n, words_per_row, bits: vec![0; n * words_per_row] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.bits[u * self.words_per_row + v / 64] >> (v % 64) & 1 == 1
    }

    /// Adds the edge `{u, v}`; loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u == v {
            return;
        }
        self.bits[u * self.words_per_row + v / 64] |= 1 << (v % 64);
        self.bits[v * self.words_per_row + u / 64] |= 1 << (u % 64);
    }

    pub fn degree(&self, u: usize) -> usize {
        let row = &self.bits[u * self.words_per_row..(u + 1) * self.words_per_row];
        row.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|u| self.degree(u)).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.degrees().iter().sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| ((u + 1)..self.n).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v)))
    }
}

impl std::fmt::Debug for LabeledGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LabeledGraph").field("n", &self.n).field("edges", &self.edge_count()).finish()
    }
}

/// Block sizes proportional to `c`, rounded by largest remainder so they sum to `n`.
pub fn block_sizes(c: &[f64], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = c.iter().map(|&ci| ci * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut by_remainder: Vec<usize> = (0..c.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Samples an `n`-vertex graph: vertices are split into consecutive blocks of
/// sizes [`block_sizes`], and each pair `i < j` is joined independently with
/// probability `g_{block(i), block(j)}`. Deterministic given `seed`.
pub fn sample_graph(g: &StepGraphon<f64>, n: usize, seed: u64) -> LabeledGraph {
    let sizes = block_sizes(g.fractions(), n);
    let block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat(b).take(s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = LabeledGraph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            let p = g.value(block[u], block[v]);
            // always draw so the stream position is independent of p
            let x: f64 = rng.random();
            if x < p {
                graph.add_edge(u, v);
            }
        }
    }
    graph
}

/// Random step graphon with `k` blocks: fractions proportional to uniform
/// weights on `[0.05, 1)`, values uniform on `[0, 1)`.
pub fn random_step_graphon<R: Rng + ?Sized>(rng: &mut R, k: usize) -> StepGraphon<f64> {
    let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut c: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let head: f64 = c[..k - 1].iter().sum();
    c[k - 1] = 1.0 - head;
    let mut rows = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let v: f64 = rng.random();
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    StepGraphon::new(c, rows).expect("random graphon is valid")
}

/// Homomorphism density of the k-star: `Σ_v deg(v)^k / n^{k+1}`.
pub fn graph_star_density(graph: &LabeledGraph, k: u32) -> f64 {
    let n = graph.n() as f64;
    if graph.n() == 0 {
        return 0.0;
    }
    let total: f64 = graph.degrees().iter().map(|&d| (d as f64).powi(k as i32)).sum();
    total / n.powi(k as i32 + 1)
}
