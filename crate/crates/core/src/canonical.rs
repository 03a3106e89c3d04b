//! Canonical form of step graphons: drop negligible blocks, merge blocks with
//! (numerically) identical rows, and sort blocks into a total order.

use std::cmp::Ordering;

use crate::graphon::{GraphonError, StepGraphon};
use crate::scalar::Real;

pub const DEFAULT_MERGE_TOL: f64 = 1e-4;
pub const DEFAULT_DROP_TOL: f64 = 1e-6;

fn check_tol(name: &'static str, value: f64) -> Result<(), GraphonError> {
    if value > 0.0 && value < 0.1 {
        Ok(())
    } else {
        Err(GraphonError::Tolerance { name, value })
    }
}

/// Canonical representative of `g`.
///
/// Blocks lighter than `drop_tol` are removed and the remaining mass is
/// renormalized. Any two blocks whose rows differ by less than `merge_tol`
/// in every column are merged (fractions add, values are c-weighted means,
/// which keeps the edge density exact). Blocks are then ordered by degree
/// descending, then diagonal value descending, then fraction descending.
pub fn canonicalize<T: Real>(
    g: &StepGraphon<T>,
    merge_tol: f64,
    drop_tol: f64,
) -> Result<StepGraphon<T>, GraphonError> {
    check_tol("merge_tol", merge_tol)?;
    check_tol("drop_tol", drop_tol)?;
    let merge_tol = T::lit(merge_tol);
    let drop_tol = T::lit(drop_tol);

    let mut keep: Vec<usize> = (0..g.k()).filter(|&i| g.fractions()[i] >= drop_tol).collect();
    if keep.is_empty() {
        // only possible with an enormous number of tiny blocks
        let heaviest = (0..g.k())
            .max_by(|&a, &b| g.fractions()[a].partial_cmp(&g.fractions()[b]).unwrap_or(Ordering::Equal))
            .expect("non-empty graphon");
        keep.push(heaviest);
    }
    let mass = keep.iter().fold(T::zero(), |acc, &i| acc + g.fractions()[i]);
    let mut c: Vec<T> = keep.iter().map(|&i| g.fractions()[i] / mass).collect();
    let mut rows: Vec<Vec<T>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| g.value(i, j)).collect())
        .collect();

    while let Some((a, b)) = closest_pair(&rows, merge_tol) {
        merge_blocks(&mut c, &mut rows, a, b);
    }

    let k = c.len();
    let degrees: Vec<T> = (0..k)
        .map(|i| rows[i].iter().zip(&c).fold(T::zero(), |acc, (&v, &w)| acc + v * w))
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    let desc = |x: T, y: T| y.partial_cmp(&x).unwrap_or(Ordering::Equal);
    order.sort_by(|&a, &b| {
        desc(degrees[a], degrees[b])
            .then_with(|| desc(rows[a][a], rows[b][b]))
            .then_with(|| desc(c[a], c[b]))
    });

    let mut fractions: Vec<T> = order.iter().map(|&i| c[i]).collect();
    let head = fractions[..k - 1].iter().fold(T::zero(), |acc, &v| acc + v);
    fractions[k - 1] = (T::one() - head).max(T::zero());
    let mut flat = Vec::with_capacity(k * k);
    for &i in &order {
        for &j in &order {
            flat.push(rows[i][j]);
        }
    }
    Ok(StepGraphon::from_parts_unchecked(fractions, flat))
}

/// Number of blocks of the canonical form (drop tolerance at its default).
pub fn podality<T: Real>(g: &StepGraphon<T>, merge_tol: f64) -> Result<usize, GraphonError> {
    Ok(canonicalize(g, merge_tol, DEFAULT_DROP_TOL)?.k())
}

/// Pair with the smallest row distance, if that distance is below `tol`.
fn closest_pair<T: Real>(rows: &[Vec<T>], tol: T) -> Option<(usize, usize)> {
    let k = rows.len();
    let mut best: Option<(T, usize, usize)> = None;
    for a in 0..k {
        for b in (a + 1)..k {
            let dist = rows[a]
                .iter()
                .zip(&rows[b])
                .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()));
            if dist < tol && best.map_or(true, |(d, _, _)| dist < d) {
                best = Some((dist, a, b));
            }
        }
    }
    best.map(|(_, a, b)| (a, b))
}

fn merge_blocks<T: Real>(c: &mut Vec<T>, rows: &mut Vec<Vec<T>>, a: usize, b: usize) {
    let (ca, cb) = (c[a], c[b]);
    let total = ca + cb;
    let k = c.len();
    let mut merged_row: Vec<T> = (0..k)
        .map(|m| {
            if total > T::zero() {
                (ca * rows[a][m] + cb * rows[b][m]) / total
            } else {
                rows[a][m]
            }
        })
        .collect();
    let diag = if total > T::zero() {
        (ca * ca * rows[a][a] + T::int(2) * ca * cb * rows[a][b] + cb * cb * rows[b][b]) / (total * total)
    } else {
        rows[a][a]
    };
    merged_row[a] = diag;
    for m in 0..k {
        rows[m][a] = merged_row[m];
    }
    rows[a] = merged_row;
    c[a] = total;
    c.remove(b);
    rows.remove(b);
    for row in rows.iter_mut() {
        row.remove(b);
    }
}
