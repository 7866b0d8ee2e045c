//! Single-view kernel power k-means on random Fourier features.
//!
//! Each iteration computes the power-mean gradient weights `w_ij` of every
//! point's squared distances to the current centroids, normalizes every
//! column of `w` to sum to one, and moves centroid `j` to the
//! `W[:, j]`-weighted mean of the mapped rows. This is the
//! majorize-minimize step for `f_s(W) = sum_i M_s(d_i1^2, ..., d_ik^2)`, so
//! `f_s` never increases while `s` is held fixed. Between steps `s` is
//! annealed towards `-inf`, turning the smooth objective into kernel k-means.
//!
//! Nothing of size `n x n` is ever formed: one iteration costs `O(n k D)`
//! on top of the one-off `O(n d D)` feature map.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::features::{map_features, recommended_dim, sample_rff, KernelSpec, MappedFeatures, RffMap};
use crate::geometry::{self, argmin_rows, sq_distances};
use crate::powermeans::{log_gradient_weights_into, power_mean_unchecked, PowerSchedule};

/// Lloyd refinement passes after k-means++ seeding.
pub const INIT_LLOYD_ITERS: usize = 10;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 300;

/// Log-weights below this underflow to zero in linear scale.
const LOG_MIN_POSITIVE: f64 = -708.396_418_532_264_1;

/// Column-stochastic `n x k` influence matrix: centroid `j` is `sum_i W[i, j] * phi(x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipMatrix(Array2<f64>);

impl MembershipMatrix {
    pub const COLUMN_TOL: f64 = 1e-9;

    pub fn new(w: Array2<f64>) -> Result<Self> {
        if w.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("membership entries must lie in [0, 1]"));
        }
        for (j, col) in w.columns().into_iter().enumerate() {
            let sum = col.sum();
            if (sum - 1.0).abs() > Self::COLUMN_TOL {
                return Err(Error::invalid(format!("membership column {j} sums to {sum}")));
            }
        }
        Ok(MembershipMatrix(w))
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        MembershipMatrix(Array2::from_elem((n, k), 1.0 / n as f64))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n_clusters(&self) -> usize {
        self.0.ncols()
    }

    /// Centroids `Phi W`, one row per cluster.
    pub fn centroids(&self, points: ArrayView2<'_, f64>) -> Array2<f64> {
        geometry::weighted_sums(self.0.view(), points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub s: f64,
    pub objective: f64,
}

/// A cluster whose weight column underflowed to zero and was moved onto a data point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadClusterEvent {
    pub iteration: usize,
    pub cluster: usize,
    pub reseeded_at: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpkmConfig {
    pub k: usize,
    pub kernel: KernelSpec,
    /// Number of random frequencies; `recommended_dim(k)` when unset.
    pub rff_dim: Option<usize>,
    pub schedule: PowerSchedule,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl KpkmConfig {
    pub fn new(k: usize) -> Self {
        KpkmConfig {
            k,
            kernel: KernelSpec::default(),
            rff_dim: None,
            schedule: PowerSchedule::single_view(),
            seed: 0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_rff_dim(mut self, dim: usize) -> Self {
        self.rff_dim = Some(dim);
        self
    }

    pub fn with_schedule(mut self, schedule: PowerSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn rff_dim_or_default(&self) -> usize {
        self.rff_dim.unwrap_or_else(|| recommended_dim(self.k))
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be positive, got {}", self.tol)));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpkmResult {
    pub membership: MembershipMatrix,
    pub centroids: Array2<f64>,
    pub trace: Vec<TracePoint>,
    pub assignments: Vec<usize>,
    pub iterations_run: usize,
    pub converged: bool,
    pub dead_clusters: Vec<DeadClusterEvent>,
    pub final_s: f64,
    /// Feature map the clustering ran in; `None` for input-space runs.
    pub feature_map: Option<RffMap>,
}

/// One weight/centroid update.
#[derive(Debug, Clone)]
pub struct Step {
    pub membership: MembershipMatrix,
    pub centroids: Array2<f64>,
    /// `(cluster, point)` pairs for clusters that were re-seeded.
    pub reseeded: Vec<(usize, usize)>,
}

pub fn init_centroids(mapped: &MappedFeatures, k: usize, seed: u64) -> Result<Array2<f64>> {
    init_centroids_on(mapped.view(), k, seed)
}

/// k-means++ seeding followed by at most [`INIT_LLOYD_ITERS`] Lloyd passes.
pub fn init_centroids_on(points: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<Array2<f64>> {
    if k == 0 || k > points.nrows() {
        return Err(Error::invalid(format!(
            "need 1 <= k <= n, got k={k}, n={}",
            points.nrows()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = geometry::kmeans_plus_plus(points, k, &mut rng);
    let seeds = geometry::select_rows(points, &idx);
    Ok(geometry::lloyd(points, seeds, INIT_LLOYD_ITERS).0)
}

/// Per-row log gradient weights of the power mean of `dists`, `s < 0`.
pub(crate) fn row_log_weights(dists: ArrayView2<'_, f64>, s: f64) -> Array2<f64> {
    let (n, k) = dists.dim();
    let mut flat = vec![0.0; n * k];
    flat.par_chunks_mut(k).enumerate().for_each(|(i, out)| {
        let row = dists.row(i);
        let y = row.as_slice().map(<[f64]>::to_vec).unwrap_or_else(|| row.to_vec());
        log_gradient_weights_into(&y, s, out);
    });
    Array2::from_shape_vec((n, k), flat).expect("buffer sized from shape")
}

/// Normalizes each column of `exp(log_w)` to sum to one, working in log space.
/// Returns the clusters whose linear weights all underflow.
pub(crate) fn normalize_columns(log_w: &Array2<f64>) -> (Array2<f64>, Vec<usize>) {
    let mut w = Array2::zeros(log_w.dim());
    let mut dead = Vec::new();
    for (j, col) in log_w.columns().into_iter().enumerate() {
        let top = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(top > LOG_MIN_POSITIVE) {
            dead.push(j);
            continue;
        }
        let total: f64 = col.iter().map(|v| (v - top).exp()).sum();
        for (out, v) in w.column_mut(j).iter_mut().zip(col.iter()) {
            *out = (v - top).exp() / total;
        }
    }
    (w, dead)
}

/// One majorize-minimize update at exponent `s < 0`.
pub fn kpkm_step(points: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>, s: f64) -> Step {
    let dists = sq_distances(points, centroids);
    let log_w = row_log_weights(dists.view(), s);
    let (mut w, dead) = normalize_columns(&log_w);
    let mut next = geometry::weighted_sums(w.view(), points);
    let reseeded = reseed_dead(points, &mut next, &mut w, &dead);
    Step {
        membership: MembershipMatrix(w),
        centroids: next,
        reseeded,
    }
}

/// Moves each dead centroid onto the point farthest from every live centroid.
pub(crate) fn reseed_dead(
    points: ArrayView2<'_, f64>,
    centroids: &mut Array2<f64>,
    weights: &mut Array2<f64>,
    dead: &[usize],
) -> Vec<(usize, usize)> {
    if dead.is_empty() {
        return Vec::new();
    }
    let k = centroids.nrows();
    let mut live: Vec<bool> = (0..k).map(|j| !dead.contains(&j)).collect();
    let mut out = Vec::with_capacity(dead.len());
    for &j in dead {
        let d = sq_distances(points, centroids.view());
        let far = d
            .outer_iter()
            .map(|row| {
                row.iter()
                    .zip(&live)
                    .filter(|(_, l)| **l)
                    .map(|(v, _)| *v)
                    .fold(f64::INFINITY, f64::min)
            })
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) })
            .0;
        centroids.row_mut(j).assign(&points.row(far));
        weights.column_mut(j).fill(0.0);
        weights[[far, j]] = 1.0;
        live[j] = true;
        out.push((j, far));
    }
    out
}

/// `sum_i M_s(||p_i - c_1||^2, ..., ||p_i - c_k||^2)` with clamped distances.
pub fn objective_at(points: ArrayView2<'_, f64>, centroids: ArrayView2<'_, f64>, s: f64) -> f64 {
    let dists = sq_distances(points, centroids);
    let per_row: Vec<f64> = dists
        .outer_iter()
        .map(|row| match row.as_slice() {
            Some(y) => power_mean_unchecked(y, s),
            None => power_mean_unchecked(&row.to_vec(), s),
        })
        .collect();
    per_row.iter().sum()
}

/// `f_s(W)` with centroids formed as `Phi W`.
pub fn objective(points: ArrayView2<'_, f64>, membership: &MembershipMatrix, s: f64) -> f64 {
    objective_at(points, membership.centroids(points).view(), s)
}

/// Clusters `x` in the random-feature space of `config.kernel`.
pub fn fit_kpkm(x: &FeatureMatrix, config: &KpkmConfig) -> Result<KpkmResult> {
    config.validate()?;
    let map = sample_rff(x.n_features(), config.rff_dim_or_default(), &config.kernel, config.seed)?;
    let mapped = map_features(x, &map)?;
    let mut result = fit_kpkm_mapped(&mapped, config)?;
    result.feature_map = Some(map);
    Ok(result)
}

/// Runs the solver on already mapped features.
pub fn fit_kpkm_mapped(mapped: &MappedFeatures, config: &KpkmConfig) -> Result<KpkmResult> {
    let init = init_centroids(mapped, config.k, config.seed)?;
    run_from(mapped.view(), init, config)
}

/// Runs the annealed power k-means loop on arbitrary rows, starting from `init`.
pub fn run_from(points: ArrayView2<'_, f64>, init: Array2<f64>, config: &KpkmConfig) -> Result<KpkmResult> {
    config.validate()?;
    let n = points.nrows();
    if n == 0 {
        return Err(Error::invalid("no samples"));
    }
    if config.k > n || init.nrows() != config.k || init.ncols() != points.ncols() {
        return Err(Error::invalid(format!(
            "inconsistent shapes: k={}, n={}, init {:?}, points width {}",
            config.k,
            n,
            init.dim(),
            points.ncols()
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite features"));
    }

    let schedule = config.schedule;
    let mut s = schedule.s0;
    let mut centroids = init;
    let mut membership = MembershipMatrix::uniform(n, config.k);
    let mut assignments = argmin_rows(sq_distances(points, centroids.view()).view());
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut dead_clusters = Vec::new();
    let mut stable_for = 0usize;
    let mut converged = false;
    let mut iterations_run = 0;

    for t in 1..=config.max_iter {
        iterations_run = t;
        let step = kpkm_step(points, centroids.view(), s);
        dead_clusters.extend(step.reseeded.iter().map(|&(cluster, reseeded_at)| DeadClusterEvent {
            iteration: t,
            cluster,
            reseeded_at,
        }));
        centroids = step.centroids;
        membership = step.membership;

        let dists = sq_distances(points, centroids.view());
        let f = dists
            .outer_iter()
            .map(|row| power_mean_unchecked(&row.to_vec(), s))
            .sum::<f64>();
        let next_assign = argmin_rows(dists.view());
        stable_for = if next_assign == assignments { stable_for + 1 } else { 0 };
        assignments = next_assign;

        let inner = match trace.last() {
            Some(prev) if prev.s == s => (prev.objective - f).abs() / f.max(1e-12) < config.tol,
            _ => false,
        };
        trace.push(TracePoint {
            iteration: t,
            s,
            objective: f,
        });
        // annealing is exhausted once s sits on the floor, or once a full
        // cadence window including an s update left the partition unchanged
        let outer = schedule.at_floor(s) || schedule.gamma == 1.0 || stable_for > schedule.cadence;
        if inner && outer && step.reseeded.is_empty() {
            converged = true;
            break;
        }
        s = schedule.advance(s, t);
    }

    Ok(KpkmResult {
        membership,
        centroids,
        trace,
        assignments,
        iterations_run,
        converged,
        dead_clusters,
        final_s: s,
        feature_map: None,
    })
}
