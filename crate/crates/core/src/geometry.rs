//! Row-parallel distance and centroid kernels shared by the solvers.
//!
//! Per-row work is split across threads freely since rows are independent.
//! Sums over rows use fixed-size chunks merged in chunk order, so results do
//! not depend on the number of worker threads.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Lower bound applied to every squared point-centroid distance.
pub const SQ_DIST_CLAMP: f64 = 1e-12;

const REDUCE_CHUNK: usize = 2048;

pub fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `n x k` squared distances between rows of `points` and rows of `centroids`,
/// clamped below at [`SQ_DIST_CLAMP`].
pub fn sq_distances(points: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>) -> Array2<f64> {
    let (n, k) = (points.nrows(), centroids.nrows());
    let mut flat = vec![0.0; n * k];
    flat.par_chunks_mut(k.max(1)).enumerate().for_each(|(i, out)| {
        let p = points.row(i);
        for (o, c) in out.iter_mut().zip(centroids.outer_iter()) {
            *o = sq_dist(p, c).max(SQ_DIST_CLAMP);
        }
    });
    Array2::from_shape_vec((n, k), flat).expect("buffer sized from shape")
}

/// Index of the smallest entry per row, ties to the lowest index.
pub fn argmin_rows(values: ArrayView2<'_, f64>) -> Vec<usize> {
    values
        .outer_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::INFINITY), |(bi, bv), (j, &v)| if v < bv { (j, v) } else { (bi, bv) })
                .0
        })
        .collect()
}

/// Index of the largest entry per row, ties to the lowest index.
pub fn argmax_rows(values: ArrayView2<'_, f64>) -> Vec<usize> {
    values
        .outer_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (j, &v)| if v > bv { (j, v) } else { (bi, bv) })
                .0
        })
        .collect()
}

/// `weights^T * points`: a `k x p` matrix whose row `j` is `sum_i weights[i, j] * points[i]`.
pub(crate) fn weighted_sums(weights: ArrayView2<'_, f64>, points: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = points.nrows();
    let starts: Vec<usize> = (0..n).step_by(REDUCE_CHUNK).collect();
    let partials: Vec<Array2<f64>> = starts
        .par_iter()
        .map(|&lo| {
            let hi = (lo + REDUCE_CHUNK).min(n);
            let w = weights.slice(ndarray::s![lo..hi, ..]);
            let p = points.slice(ndarray::s![lo..hi, ..]);
            w.t().dot(&p)
        })
        .collect();
    let mut total = Array2::zeros((weights.ncols(), points.ncols()));
    for part in &partials {
        total += part;
    }
    total
}

/// Means of the rows of `points` grouped by `labels`. Empty groups keep `fallback`'s row.
pub(crate) fn group_means(
    points: ArrayView2<'_, f64>,
    labels: &[usize],
    fallback: ArrayView2<'_, f64>,
) -> Array2<f64> {
    let k = fallback.nrows();
    let mut sums = Array2::<f64>::zeros((k, points.ncols()));
    let mut counts = vec![0usize; k];
    for (row, &l) in points.outer_iter().zip(labels) {
        sums.row_mut(l).scaled_add(1.0, &row);
        counts[l] += 1;
    }
    for (j, mut row) in sums.axis_iter_mut(Axis(0)).enumerate() {
        if counts[j] == 0 {
            row.assign(&fallback.row(j));
        } else {
            row /= counts[j] as f64;
        }
    }
    sums
}

/// k-means++ seeding: indices of `k` distinct rows.
///
/// The first row is uniform; each next row is drawn with probability
/// proportional to its squared distance to the nearest chosen row. When every
/// remaining row coincides with a chosen one, the next pick is uniform over
/// unchosen rows.
pub(crate) fn kmeans_plus_plus(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut nearest: Vec<f64> = points
        .outer_iter()
        .map(|p| sq_dist(p, points.row(first)))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().zip(&taken).filter(|(_, t)| !**t).map(|(d, _)| d).sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for i in 0..n {
                if taken[i] || nearest[i] <= 0.0 {
                    continue;
                }
                pick = Some(i);
                target -= nearest[i];
                if target <= 0.0 {
                    break;
                }
            }
            pick.expect("positive total implies a candidate")
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !taken[*i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(pick);
        taken[pick] = true;
        let c = points.row(pick);
        for (d, p) in nearest.iter_mut().zip(points.outer_iter()) {
            *d = d.min(sq_dist(p, c));
        }
    }
    chosen
}

/// Lloyd iterations from the given centroids; stops early once labels settle.
pub(crate) fn lloyd(points: ArrayView2<'_, f64>, mut centroids: Array2<f64>, max_iter: usize) -> (Array2<f64>, Vec<usize>, usize) {
    let mut labels = argmin_rows(sq_distances(points, centroids.view()).view());
    let mut iterations = 0;
    for _ in 0..max_iter {
        iterations += 1;
        centroids = group_means(points, &labels, centroids.view());
        let next = argmin_rows(sq_distances(points, centroids.view()).view());
        let settled = next == labels;
        labels = next;
        if settled {
            break;
        }
    }
    (centroids, labels, iterations)
}

pub(crate) fn select_rows(points: ArrayView2<'_, f64>, idx: &[usize]) -> Array2<f64> {
    points.select(Axis(0), idx)
}
