//! Deterministic floating point reductions.
//!
//! Every sum in the crate goes through [`tree_sum`] or [`par_map_sum`]. The
//! pairing order depends only on the length of the input, never on the number
//! of worker threads, so results are bitwise reproducible.

use rayon::prelude::*;

const LEAF: usize = 16;

/// Pairwise (tree) summation.
pub fn tree_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
}

/// Maps `f` over `0..len` in parallel and tree-sums the results in index order.
pub fn par_map_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let parts: Vec<f64> = (0..len).into_par_iter().map(f).collect();
    tree_sum(&parts)
}

/// Column-wise tree sum of fixed-width rows, in row order.
pub fn tree_sum_rows<const W: usize>(rows: &[[f64; W]]) -> [f64; W] {
    let mut out = [0.0; W];
    let mut column = Vec::with_capacity(rows.len());
    for (k, slot) in out.iter_mut().enumerate() {
        column.clear();
        column.extend(rows.iter().map(|r| r[k]));
        *slot = tree_sum(&column);
    }
    out
}
