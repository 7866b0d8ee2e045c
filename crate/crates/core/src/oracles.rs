//! Reference implementations for checking the random-feature solvers.
//!
//! [`exact_kpkm`] runs the same iteration as [`crate::kpkm`] through the
//! kernel trick, so comparing the two isolates the random-feature error.
//! Everything here that touches an `n x n` kernel matrix refuses inputs with
//! more than [`MAX_EXACT_N`] samples.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::features::KernelSpec;
use crate::geometry::{self, argmin_rows, sq_dist, SQ_DIST_CLAMP};
use crate::kpkm::{self, KpkmConfig, KpkmResult, TracePoint};
use crate::powermeans::{log_gradient_weights, power_mean};

pub const MAX_EXACT_N: usize = 2000;

fn guard(n: usize) -> Result<()> {
    if n > MAX_EXACT_N {
        return Err(Error::invalid(format!(
            "exact kernel path limited to n <= {MAX_EXACT_N}, got {n}"
        )));
    }
    Ok(())
}

/// Dense Gaussian kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix(Array2<f64>);

impl KernelMatrix {
    pub fn new(x: &FeatureMatrix, spec: &KernelSpec) -> Result<Self> {
        let n = x.n_samples();
        guard(n)?;
        let mut k = Array2::zeros((n, n));
        for i in 0..n {
            k[[i, i]] = 1.0;
            for j in 0..i {
                let v = spec.from_sq_dist(sq_dist(x.row(i), x.row(j)));
                k[[i, j]] = v;
                k[[j, i]] = v;
            }
        }
        Ok(KernelMatrix(k))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    /// Squared feature-space distances from every point to every centroid
    /// `Phi c_j`, where `coef` holds the `c_j` as columns.
    pub fn distances_to(&self, coef: ArrayView2<'_, f64>) -> Array2<f64> {
        let kc = self.0.dot(&coef);
        let n = self.n();
        let mut d = Array2::zeros((n, coef.ncols()));
        for j in 0..coef.ncols() {
            let quad = coef.column(j).dot(&kc.column(j));
            for i in 0..n {
                d[[i, j]] = (self.0[[i, i]] + quad - 2.0 * kc[[i, j]]).max(SQ_DIST_CLAMP);
            }
        }
        d
    }
}

/// Output of [`exact_kpkm`]; centroids are held as coefficient columns over the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactKpkmResult {
    pub membership: Array2<f64>,
    pub trace: Vec<TracePoint>,
    pub assignments: Vec<usize>,
    pub iterations_run: usize,
    pub converged: bool,
}

fn exact_init(km: &KernelMatrix, k: usize, seed: u64) -> Array2<f64> {
    let n = km.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kd = |a: usize, b: usize| {
        let m = km.as_array();
        (m[[a, a]] + m[[b, b]] - 2.0 * m[[a, b]]).max(0.0)
    };
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| kd(i, chosen[0])).collect();
    while chosen.len() < k {
        let total: f64 = (0..n).filter(|i| !chosen.contains(i)).map(|i| nearest[i]).sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for i in 0..n {
                if chosen.contains(&i) || nearest[i] <= 0.0 {
                    continue;
                }
                pick = Some(i);
                target -= nearest[i];
                if target <= 0.0 {
                    break;
                }
            }
            pick.unwrap()
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(pick);
        for i in 0..n {
            nearest[i] = nearest[i].min(kd(i, pick));
        }
    }
    let mut coef = Array2::zeros((n, k));
    for (j, &i) in chosen.iter().enumerate() {
        coef[[i, j]] = 1.0;
    }
    let mut labels = argmin_rows(km.distances_to(coef.view()).view());
    for _ in 0..kpkm::INIT_LLOYD_ITERS {
        let mut next = Array2::zeros((n, k));
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for (i, &l) in labels.iter().enumerate() {
            next[[i, l]] = 1.0 / counts[l] as f64;
        }
        for j in 0..k {
            if counts[j] == 0 {
                next.column_mut(j).assign(&coef.column(j));
            }
        }
        coef = next;
        let relabeled = argmin_rows(km.distances_to(coef.view()).view());
        let settled = relabeled == labels;
        labels = relabeled;
        if settled {
            break;
        }
    }
    coef
}

/// Kernel power k-means through the kernel trick, with the same seeding,
/// annealing and stopping rules as the random-feature solver.
pub fn exact_kpkm(x: &FeatureMatrix, config: &KpkmConfig) -> Result<ExactKpkmResult> {
    let n = x.n_samples();
    guard(n)?;
    if config.k == 0 || config.k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k={}, n={n}", config.k)));
    }
    let km = KernelMatrix::new(x, &config.kernel)?;
    let schedule = config.schedule;
    let mut coef = exact_init(&km, config.k, config.seed);
    let mut s = schedule.s0;
    let mut assignments = argmin_rows(km.distances_to(coef.view()).view());
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut stable_for = 0;
    let mut converged = false;
    let mut iterations_run = 0;

    for t in 1..=config.max_iter {
        iterations_run = t;
        let d = km.distances_to(coef.view());
        let mut w = Array2::zeros((n, config.k));
        for i in 0..n {
            let lw = log_gradient_weights(&d.row(i).to_vec(), s)?;
            w.row_mut(i).assign(&Array1::from(lw));
        }
        let mut next = Array2::zeros((n, config.k));
        let mut reseeded = false;
        for j in 0..config.k {
            let top = w.column(j).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            if top < -708.0 {
                // dead column: move onto the point farthest from live centroids
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let ma = (0..config.k).filter(|&c| c != j).map(|c| d[[a, c]]).fold(f64::INFINITY, f64::min);
                        let mb = (0..config.k).filter(|&c| c != j).map(|c| d[[b, c]]).fold(f64::INFINITY, f64::min);
                        ma.partial_cmp(&mb).unwrap().then(b.cmp(&a))
                    })
                    .unwrap();
                next[[far, j]] = 1.0;
                reseeded = true;
                continue;
            }
            let total: f64 = w.column(j).iter().map(|v| (v - top).exp()).sum();
            for i in 0..n {
                next[[i, j]] = (w[[i, j]] - top).exp() / total;
            }
        }
        coef = next;
        let d = km.distances_to(coef.view());
        let mut f = 0.0;
        for row in d.outer_iter() {
            f += power_mean(&row.to_vec(), s)?;
        }
        let relabeled = argmin_rows(d.view());
        stable_for = if relabeled == assignments { stable_for + 1 } else { 0 };
        assignments = relabeled;
        let inner = matches!(trace.last(), Some(p) if p.s == s && (p.objective - f).abs() / f.max(1e-12) < config.tol);
        trace.push(TracePoint { iteration: t, s, objective: f });
        let outer = schedule.at_floor(s) || schedule.gamma == 1.0 || stable_for > schedule.cadence;
        if inner && outer && !reseeded {
            converged = true;
            break;
        }
        s = schedule.advance(s, t);
    }

    Ok(ExactKpkmResult {
        membership: coef,
        trace,
        assignments,
        iterations_run,
        converged,
    })
}

fn cluster_members(assignments: &[usize]) -> Vec<Vec<usize>> {
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); k];
    for (i, &a) in assignments.iter().enumerate() {
        groups[a].push(i);
    }
    groups
}

/// Kernel k-means cost of a partition, evaluated with the kernel trick:
/// `sum_i ||phi(x_i) - mean of phi over i's cluster||^2`.
pub fn kkm_cost_kernel(x: &FeatureMatrix, assignments: &[usize], spec: &KernelSpec) -> Result<f64> {
    let n = x.n_samples();
    guard(n)?;
    if assignments.len() != n {
        return Err(Error::invalid("assignment length differs from sample count"));
    }
    let mut cost = 0.0;
    for members in cluster_members(assignments).iter().filter(|m| !m.is_empty()) {
        let size = members.len() as f64;
        let mut within = 0.0;
        for &a in members {
            for &b in members {
                within += spec.from_sq_dist(sq_dist(x.row(a), x.row(b)));
            }
        }
        // sum_i [K_ii - (2/|C|) sum_b K_ib] + |C| * (1/|C|^2) sum_ab K_ab
        cost += size - within / size;
    }
    Ok(cost)
}

/// The same cost with explicit feature vectors (mapped or raw).
pub fn kkm_cost_features(points: ArrayView2<'_, f64>, assignments: &[usize]) -> Result<f64> {
    if assignments.len() != points.nrows() {
        return Err(Error::invalid("assignment length differs from sample count"));
    }
    let mut cost = 0.0;
    for members in cluster_members(assignments).iter().filter(|m| !m.is_empty()) {
        let group = points.select(Axis(0), members);
        let mean = group.mean_axis(Axis(0)).expect("non-empty group");
        cost += group.outer_iter().map(|r| sq_dist(r, mean.view())).sum::<f64>();
    }
    Ok(cost)
}

/// Parameters for [`make_blobs`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n: usize,
    pub k: usize,
    pub dim: usize,
    /// Minimum pairwise center distance, in units of the blob standard deviation.
    pub separation: f64,
    /// Fraction of the `n` samples replaced by uniform outliers.
    pub noise_fraction: f64,
    /// Half-width of the outlier cube around the centers' mean, in blob standard deviations.
    pub outlier_scale: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(n: usize, k: usize, dim: usize, separation: f64, seed: u64) -> Self {
        BlobSpec {
            n,
            k,
            dim,
            separation,
            noise_fraction: 0.0,
            outlier_scale: 0.0,
            seed,
        }
    }

    pub fn with_outliers(mut self, fraction: f64, scale: f64) -> Self {
        self.noise_fraction = fraction;
        self.outlier_scale = scale;
        self
    }
}

/// Synthetic data with known labels. Outliers carry label `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blobs {
    pub data: FeatureMatrix,
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    pub is_outlier: Vec<bool>,
}

impl Blobs {
    pub fn inliers(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| !self.is_outlier[i]).collect()
    }
}

/// Isotropic unit-variance Gaussian blobs with well-separated centers.
pub fn make_blobs(spec: &BlobSpec) -> Result<Blobs> {
    let BlobSpec { n, k, dim, separation, noise_fraction, outlier_scale, seed } = *spec;
    if n == 0 || k == 0 || dim == 0 || k > n {
        return Err(Error::invalid(format!("bad blob shape n={n}, k={k}, dim={dim}")));
    }
    if !(0.0..1.0).contains(&noise_fraction) || separation < 0.0 {
        return Err(Error::invalid("noise_fraction must be in [0, 1) and separation >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut half = separation.max(1.0) * (k as f64).powf(1.0 / dim as f64);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut misses = 0;
    while centers.len() < k {
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-half..=half)).collect();
        let ok = centers.iter().all(|o| {
            o.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= separation
        });
        if ok {
            centers.push(c);
        } else {
            misses += 1;
            if misses % 200 == 0 {
                half *= 1.5;
            }
        }
    }

    let n_out = (noise_fraction * n as f64).round() as usize;
    let n_in = n - n_out;
    if n_in < k {
        return Err(Error::invalid("too many outliers for the number of blobs"));
    }
    let middle: Vec<f64> = (0..dim).map(|c| centers.iter().map(|v| v[c]).sum::<f64>() / k as f64).collect();
    let mut data = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    let mut is_outlier = Vec::with_capacity(n);
    for i in 0..n_in {
        let j = i % k;
        for c in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            data[[i, c]] = centers[j][c] + z;
        }
        labels.push(j);
        is_outlier.push(false);
    }
    for i in n_in..n {
        for c in 0..dim {
            data[[i, c]] = middle[c] + rng.gen_range(-outlier_scale..=outlier_scale);
        }
        labels.push(k);
        is_outlier.push(true);
    }
    let flat: Vec<f64> = centers.into_iter().flatten().collect();
    Ok(Blobs {
        data: FeatureMatrix::new(data)?,
        labels,
        centers: Array2::from_shape_vec((k, dim), flat).expect("k centers of length dim"),
        is_outlier,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydResult {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

/// Plain Lloyd k-means from k-means++ seeds, in input space.
pub fn lloyd_kmeans(x: &FeatureMatrix, k: usize, seed: u64, max_iter: usize) -> Result<LloydResult> {
    if k == 0 || k > x.n_samples() {
        return Err(Error::invalid(format!("need 1 <= k <= n, got k={k}, n={}", x.n_samples())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = geometry::kmeans_plus_plus(x.view(), k, &mut rng);
    let seeds = geometry::select_rows(x.view(), &idx);
    let (centroids, assignments, iterations) = geometry::lloyd(x.view(), seeds, max_iter);
    Ok(LloydResult { centroids, assignments, iterations })
}

/// Annealed power k-means in input space: the random-feature solver with the identity map.
pub fn power_kmeans(x: &FeatureMatrix, config: &KpkmConfig) -> Result<KpkmResult> {
    let init = kpkm::init_centroids_on(x.view(), config.k, config.seed)?;
    kpkm::run_from(x.view(), init, config)
}
