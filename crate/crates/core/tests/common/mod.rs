//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use stargraph::sampling::block_sizes;
use stargraph::Graphon;

/// Sum over every assignment of `vertices` vertices to blocks of
/// `Π c · Π g` over `edges`.
pub fn brute_hom(g: &Graphon, vertices: usize, edges: &[(usize, usize)]) -> f64 {
    let k = g.k();
    let mut idx = vec![0usize; vertices];
    let mut total = 0.0;
    loop {
        let mut term: f64 = idx.iter().map(|&i| g.fractions()[i]).product();
        for &(a, b) in edges {
            term *= g.value(idx[a], idx[b]);
        }
        total += term;
        let mut pos = 0;
        loop {
            if pos == vertices {
                return total;
            }
            idx[pos] += 1;
            if idx[pos] < k {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

pub fn star_edges(k: usize) -> Vec<(usize, usize)> {
    (1..=k).map(|leaf| (0, leaf)).collect()
}

pub const CHAIN3: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 3)];
pub const CYCLE4: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (3, 0)];

/// `(t₁, t₂, chain3, cycle4)` of an equal-block graphon through dense
/// matrix products.
pub fn matrix_densities(g: &Graphon) -> [f64; 4] {
    let n = g.k();
    let m = DMatrix::from_row_slice(n, n, g.values());
    let nf = n as f64;
    let d = m.column_sum() / nf;
    let t1 = d.sum() / nf;
    let t2 = d.iter().map(|v| v * v).sum::<f64>() / nf;
    let chain3 = (d.transpose() * &m * &d)[(0, 0)] / (nf * nf);
    let p = &m * &m;
    let cycle4 = p.iter().map(|v| v * v).sum::<f64>() / nf.powi(4);
    [t1, t2, chain3, cycle4]
}

pub fn central_difference(theta: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..theta.len())
        .map(|i| {
            let h = 1e-6;
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect()
}

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().chain(analytic).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-6);
    analytic.iter().zip(numeric).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

/// Standard errors of the sampled `t₁` and `t₂` from the edge variances.
pub fn sampling_errors(g: &Graphon, n: usize) -> (f64, f64) {
    let sizes = block_sizes(g.fractions(), n);
    let block: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
    let nf = n as f64;
    let mean_degree: Vec<f64> = (0..n)
        .map(|u| (0..n).filter(|&v| v != u).map(|v| g.value(block[u], block[v])).sum())
        .collect();
    let (mut var1, mut var2) = (0.0, 0.0);
    for u in 0..n {
        for v in (u + 1)..n {
            let p = g.value(block[u], block[v]);
            let bern = p * (1.0 - p);
            var1 += bern * (2.0 / (nf * nf)).powi(2);
            var2 += bern * (2.0 * (mean_degree[u] + mean_degree[v]) / nf.powi(3)).powi(2);
        }
    }
    (var1.sqrt(), var2.sqrt())
}
