//! Possibilistic multiple-kernel power k-means on random Fourier features.
//!
//! Every view `l` gets its own feature map and centroids `theta_{j,l}`. A
//! point's dissimilarity to cluster `j` in view `l` mixes the feature-space
//! distance with a typicality penalty,
//!
//! ```text
//! d~_ij,l = u_ij^m ||phi_l(x_i) - theta_j,l||^2 + (1 - u_ij)^m eta_j,l
//! ```
//!
//! and the objective is
//! `sum_i M_s(sum_l alpha_l d~_i1,l, ..., sum_l alpha_l d~_ik,l) + lambda sum_l alpha_l ln alpha_l`.
//!
//! Concavity of `M_s` gives a linear majorizer that touches the objective at
//! the current state; its weights are the fuzzy memberships `w_ij`. One sweep
//! minimizes that majorizer exactly in `U`, then the centroids, then the view
//! weights `alpha`, so the objective never increases while `s` is fixed.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::features::{map_features, recommended_dim, sample_rff, KernelSpec, MappedFeatures, RffMap};
use crate::geometry::{self, argmax_rows, sq_distances, SQ_DIST_CLAMP};
use crate::kpkm::{self, DeadClusterEvent, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::powermeans::{flushed_exp, power_mean_unchecked, PowerSchedule};

pub const DEFAULT_FUZZINESS: f64 = 2.0;
pub const DEFAULT_LAMBDA: f64 = 1.0;
/// Entropy regularization values tried by a lambda sweep.
pub const LAMBDA_GRID: [f64; 5] = [1e-1, 1e0, 1e1, 1e2, 1e3];
/// Combined-membership column mass below which a cluster counts as dead.
pub const DEAD_MASS: f64 = 1e-30;

/// Mapped features of every view, all with the same number of rows.
#[derive(Debug, Clone)]
pub struct MultiViewMapped {
    views: Vec<Array2<f64>>,
}

impl MultiViewMapped {
    pub fn new(views: Vec<MappedFeatures>) -> Result<Self> {
        Self::from_arrays(views.into_iter().map(MappedFeatures::into_matrix).collect())
    }

    /// Wraps feature matrices that are used as-is (already mapped, or raw inputs).
    pub fn from_arrays(views: Vec<Array2<f64>>) -> Result<Self> {
        let Some(first) = views.first() else {
            return Err(Error::invalid("at least one view is required"));
        };
        let n = first.nrows();
        if let Some((l, v)) = views.iter().enumerate().find(|(_, v)| v.nrows() != n) {
            return Err(Error::invalid(format!("view {l} has {} rows, view 0 has {n}", v.nrows())));
        }
        if views.iter().flat_map(|v| v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite features"));
        }
        Ok(MultiViewMapped { views })
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].nrows()
    }

    pub fn view(&self, l: usize) -> ArrayView2<'_, f64> {
        self.views[l].view()
    }
}

/// Typicality `u_ij` of point `i` for cluster `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossibilisticMatrix(Array2<f64>);

impl PossibilisticMatrix {
    pub fn new(u: Array2<f64>) -> Result<Self> {
        if u.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(Error::invalid("typicality values must lie in (0, 1]"));
        }
        Ok(PossibilisticMatrix(u))
    }

    pub fn filled(n: usize, k: usize, value: f64) -> Self {
        PossibilisticMatrix(Array2::from_elem((n, k), value))
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Simplex weights over views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewWeights(Vec<f64>);

impl ViewWeights {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        let sum: f64 = alpha.iter().sum();
        if alpha.is_empty() || alpha.iter().any(|a| !(*a > 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("view weights must be positive and sum to 1, got {alpha:?}")));
        }
        Ok(ViewWeights(alpha))
    }

    pub fn uniform(l: usize) -> Self {
        ViewWeights(vec![1.0 / l as f64; l])
    }

    /// `softmax(-costs / lambda)`, shifted by the smallest cost.
    pub fn from_costs(costs: &[f64], lambda: f64) -> Self {
        let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let raw: Vec<f64> = costs.iter().map(|c| (-(c - lo) / lambda).exp()).collect();
        let total: f64 = raw.iter().sum();
        ViewWeights(raw.into_iter().map(|v| v / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn entropy_term(&self, lambda: f64) -> f64 {
        lambda * self.0.iter().filter(|a| **a > 0.0).map(|a| a * a.ln()).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkpkmConfig {
    pub k: usize,
    /// Fuzziness exponent `m > 1`.
    pub m: f64,
    /// Entropy regularization of the view weights.
    pub lambda: f64,
    /// `k x L` regularizers; estimated from the initial centroids when unset.
    pub eta: Option<Array2<f64>>,
    /// Re-estimate `eta` after every sweep instead of freezing it after initialization.
    pub refresh_eta: bool,
    /// `false` pins every `u_ij` to 1, which removes the possibilistic term.
    pub possibilistic: bool,
    pub rff_dim: Option<usize>,
    pub schedule: PowerSchedule,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl MkpkmConfig {
    pub fn new(k: usize) -> Self {
        MkpkmConfig {
            k,
            m: DEFAULT_FUZZINESS,
            lambda: DEFAULT_LAMBDA,
            eta: None,
            refresh_eta: false,
            possibilistic: true,
            rff_dim: None,
            schedule: PowerSchedule::multi_view(),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
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

    pub fn with_possibilistic(mut self, on: bool) -> Self {
        self.possibilistic = on;
        self
    }

    pub fn rff_dim_or_default(&self) -> usize {
        self.rff_dim.unwrap_or_else(|| recommended_dim(self.k))
    }

    fn validate(&self, n_views: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(Error::invalid(format!("fuzziness m must exceed 1, got {}", self.m)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol must be positive"));
        }
        if let Some(eta) = &self.eta {
            if eta.dim() != (self.k, n_views) || eta.iter().any(|e| !(*e > 0.0)) {
                return Err(Error::invalid("eta must be a positive k x L matrix"));
            }
        }
        self.schedule.validate()
    }
}

/// Full solver state between sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkpkmState {
    /// Per-view `k x 2D_l` centroids.
    pub centroids: Vec<Array2<f64>>,
    pub u: PossibilisticMatrix,
    pub alpha: ViewWeights,
    /// Fuzzy weights: power-mean gradients, not column-normalized.
    pub w: Array2<f64>,
    pub eta: Array2<f64>,
    pub s: f64,
    pub m: f64,
    pub lambda: f64,
}

impl MkpkmState {
    pub fn n_clusters(&self) -> usize {
        self.eta.nrows()
    }
}

/// `u^m q + (1 - u)^m eta`.
pub fn possibilistic_distance(u: f64, sq_dist: f64, eta: f64, m: f64) -> f64 {
    u.powf(m) * sq_dist + (1.0 - u).powf(m) * eta
}

/// `d~_ij,l` for one point, cluster and view.
pub fn weighted_distance(views: &MultiViewMapped, state: &MkpkmState, i: usize, j: usize, l: usize) -> f64 {
    let q = geometry::sq_dist(views.view(l).row(i), state.centroids[l].row(j)).max(SQ_DIST_CLAMP);
    possibilistic_distance(state.u.as_array()[[i, j]], q, state.eta[[j, l]], state.m)
}

/// Clamped squared feature distances, one `n x k` matrix per view.
pub fn view_distances(views: &MultiViewMapped, centroids: &[Array2<f64>]) -> Vec<Array2<f64>> {
    (0..views.n_views())
        .map(|l| sq_distances(views.view(l), centroids[l].view()))
        .collect()
}

fn possibilistic_views(dists: &[Array2<f64>], state: &MkpkmState) -> Vec<Array2<f64>> {
    let u = state.u.as_array();
    dists
        .iter()
        .enumerate()
        .map(|(l, d)| {
            let mut out = d.clone();
            for ((i, j), v) in out.indexed_iter_mut() {
                *v = possibilistic_distance(u[[i, j]], *v, state.eta[[j, l]], state.m);
            }
            out
        })
        .collect()
}

/// `sum_l alpha_l d~_ij,l`, clamped below.
fn aggregate(dtilde: &[Array2<f64>], alpha: &[f64]) -> Array2<f64> {
    let mut agg = Array2::zeros(dtilde[0].dim());
    for (d, &a) in dtilde.iter().zip(alpha) {
        agg.scaled_add(a, d);
    }
    agg.mapv_inplace(|v| v.max(SQ_DIST_CLAMP));
    agg
}

fn log_fuzzy_weights(agg: &Array2<f64>, s: f64) -> Array2<f64> {
    kpkm::row_log_weights(agg.view(), s)
}

/// Fuzzy weights `w_ij`: gradient of the power mean of the aggregated distances of row `i`.
pub fn compute_fuzzy_weights(views: &MultiViewMapped, state: &MkpkmState) -> Array2<f64> {
    let dtilde = possibilistic_views(&view_distances(views, &state.centroids), state);
    log_fuzzy_weights(&aggregate(&dtilde, state.alpha.as_slice()), state.s).mapv(flushed_exp)
}

/// Step 1: closed-form typicalities `1 / (1 + (A_ij / B_j)^(1/(m-1)))`.
pub fn update_u(views: &MultiViewMapped, state: &MkpkmState) -> PossibilisticMatrix {
    let dists = view_distances(views, &state.centroids);
    let alpha = state.alpha.as_slice();
    let k = state.n_clusters();
    let b: Vec<f64> = (0..k)
        .map(|j| alpha.iter().enumerate().map(|(l, a)| a * state.eta[[j, l]]).sum())
        .collect();
    let mut a = Array2::<f64>::zeros(dists[0].dim());
    for (d, &al) in dists.iter().zip(alpha) {
        a.scaled_add(al, d);
    }
    let mut u = a;
    for ((_, j), v) in u.indexed_iter_mut() {
        *v = typicality(*v, b[j], state.m);
    }
    PossibilisticMatrix(u)
}

/// `1 / (1 + (a / b)^(1/(m-1)))` with `a` clamped below.
pub fn typicality(a: f64, b: f64, m: f64) -> f64 {
    1.0 / (1.0 + (a.max(SQ_DIST_CLAMP) / b).powf(1.0 / (m - 1.0)))
}

/// Per-column log of `gamma_ij = w_ij u_ij^m` shifted by the column max, plus the
/// log of the unshifted column mass.
fn combined_log_membership(w: &Array2<f64>, u: &PossibilisticMatrix, m: f64) -> (Array2<f64>, Vec<f64>) {
    let mut lg = w.mapv(f64::ln);
    lg.zip_mut_with(u.as_array(), |g, uv| *g += m * uv.ln());
    let mut mass = Vec::with_capacity(w.ncols());
    for mut col in lg.columns_mut() {
        let top = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            mass.push(f64::NEG_INFINITY);
            continue;
        }
        col.mapv_inplace(|v| v - top);
        let total: f64 = col.iter().map(|v| v.exp()).sum();
        mass.push(top + total.ln());
    }
    (lg, mass)
}

/// Step 2: centroids as `gamma`-weighted means of each view's mapped rows.
/// Returns the new centroids and the clusters that were re-seeded.
pub fn update_centroids(views: &MultiViewMapped, state: &MkpkmState) -> (Vec<Array2<f64>>, Vec<(usize, usize)>) {
    let (lg, log_mass) = combined_log_membership(&state.w, &state.u, state.m);
    let k = state.n_clusters();
    let mut gamma = Array2::zeros(lg.dim());
    let mut dead = Vec::new();
    for j in 0..k {
        if !(log_mass[j] > DEAD_MASS.ln()) {
            dead.push(j);
            continue;
        }
        let col = lg.column(j);
        let total: f64 = col.iter().map(|v| v.exp()).sum();
        for (g, v) in gamma.column_mut(j).iter_mut().zip(col.iter()) {
            *g = v.exp() / total;
        }
    }
    let mut centroids: Vec<Array2<f64>> = (0..views.n_views())
        .map(|l| geometry::weighted_sums(gamma.view(), views.view(l)))
        .collect();
    let reseeded = if dead.is_empty() {
        Vec::new()
    } else {
        // pick the reseed point in the alpha-weighted joint space, then copy it into every view
        let joint = joint_features(views, state.alpha.as_slice());
        let mut joint_c = joint_centroids(&centroids, state.alpha.as_slice());
        let mut scratch = gamma.clone();
        let moved = kpkm::reseed_dead(joint.view(), &mut joint_c, &mut scratch, &dead);
        for &(j, i) in &moved {
            for (l, c) in centroids.iter_mut().enumerate() {
                c.row_mut(j).assign(&views.view(l).row(i));
            }
        }
        moved
    };
    (centroids, reseeded)
}

/// Per-view costs `C_l = sum_ij w_ij d~_ij,l` at the state's `U` and centroids.
pub fn view_costs(views: &MultiViewMapped, state: &MkpkmState) -> Vec<f64> {
    let dtilde = possibilistic_views(&view_distances(views, &state.centroids), state);
    dtilde.iter().map(|d| (d * &state.w).sum()).collect()
}

/// Step 3: `alpha = softmax(-C / lambda)`.
pub fn update_alpha(views: &MultiViewMapped, state: &MkpkmState) -> ViewWeights {
    ViewWeights::from_costs(&view_costs(views, state), state.lambda)
}

/// Objective value at `state`, entropy term included.
pub fn mkpkm_objective(views: &MultiViewMapped, state: &MkpkmState) -> f64 {
    let dtilde = possibilistic_views(&view_distances(views, &state.centroids), state);
    let agg = aggregate(&dtilde, state.alpha.as_slice());
    let fit: f64 = agg
        .outer_iter()
        .map(|row| power_mean_unchecked(&row.to_vec(), state.s))
        .sum();
    fit + state.alpha.entropy_term(state.lambda)
}

/// Linear majorizer built at `anchor`, evaluated at `candidate`.
///
/// Equals [`mkpkm_objective`] when `candidate == anchor` and bounds it from
/// above everywhere else, for the same `s`, `m`, `eta` and `lambda`.
pub fn surrogate(views: &MultiViewMapped, anchor: &MkpkmState, candidate: &MkpkmState) -> f64 {
    let w = compute_fuzzy_weights(views, anchor);
    let lin = |st: &MkpkmState| {
        let dtilde = possibilistic_views(&view_distances(views, &st.centroids), st);
        let agg = aggregate(&dtilde, st.alpha.as_slice());
        (&agg * &w).sum() + st.alpha.entropy_term(st.lambda)
    };
    mkpkm_objective(views, anchor) - lin(anchor) + lin(candidate)
}

/// Step-1 subproblem `sum_ij w_ij (u_ij^m A_ij + (1 - u_ij)^m B_j)` at typicalities `u`.
pub fn step1_objective(views: &MultiViewMapped, state: &MkpkmState, u: &Array2<f64>) -> f64 {
    let dists = view_distances(views, &state.centroids);
    let alpha = state.alpha.as_slice();
    let mut total = 0.0;
    for ((i, j), &uij) in u.indexed_iter() {
        let a: f64 = dists.iter().zip(alpha).map(|(d, al)| al * d[[i, j]]).sum();
        let b: f64 = alpha.iter().enumerate().map(|(l, al)| al * state.eta[[j, l]]).sum();
        total += state.w[[i, j]] * (uij.powf(state.m) * a + (1.0 - uij).powf(state.m) * b);
    }
    total
}

fn joint_features(views: &MultiViewMapped, alpha: &[f64]) -> Array2<f64> {
    let scaled: Vec<Array2<f64>> = (0..views.n_views())
        .map(|l| views.view(l).mapv(|v| v * alpha[l].sqrt()))
        .collect();
    let parts: Vec<ArrayView2<'_, f64>> = scaled.iter().map(|a| a.view()).collect();
    concatenate(Axis(1), &parts).expect("views share the row count")
}

fn joint_centroids(centroids: &[Array2<f64>], alpha: &[f64]) -> Array2<f64> {
    let scaled: Vec<Array2<f64>> = centroids
        .iter()
        .zip(alpha)
        .map(|(c, a)| c.mapv(|v| v * a.sqrt()))
        .collect();
    let parts: Vec<ArrayView2<'_, f64>> = scaled.iter().map(|a| a.view()).collect();
    concatenate(Axis(1), &parts).expect("centroids share k")
}

/// `eta_j,l = (1/n) sum_i ||phi_l(x_i) - theta_j,l||^2`.
pub fn estimate_eta(views: &MultiViewMapped, centroids: &[Array2<f64>]) -> Array2<f64> {
    let n = views.n_samples() as f64;
    let dists = view_distances(views, centroids);
    let k = centroids[0].nrows();
    let mut eta = Array2::zeros((k, views.n_views()));
    for (l, d) in dists.iter().enumerate() {
        for j in 0..k {
            eta[[j, l]] = d.column(j).sum() / n;
        }
    }
    eta
}

/// Initial state: joint k-means++/Lloyd seeding on the `sqrt(alpha)`-weighted
/// concatenation of views with uniform `alpha`, `U = 1/2`.
pub fn initial_state(views: &MultiViewMapped, config: &MkpkmConfig) -> Result<MkpkmState> {
    config.validate(views.n_views())?;
    let n = views.n_samples();
    let l_count = views.n_views();
    if config.k > n {
        return Err(Error::invalid(format!("k={} exceeds n={n}", config.k)));
    }
    let alpha = ViewWeights::uniform(l_count);
    let joint = joint_features(views, alpha.as_slice());
    let c = kpkm::init_centroids_on(joint.view(), config.k, config.seed)?;
    let mut centroids = Vec::with_capacity(l_count);
    let mut offset = 0;
    for l in 0..l_count {
        let width = views.view(l).ncols();
        let scale = alpha.as_slice()[l].sqrt();
        centroids.push(c.slice(ndarray::s![.., offset..offset + width]).mapv(|v| v / scale));
        offset += width;
    }
    let eta = match &config.eta {
        Some(e) => e.clone(),
        None => estimate_eta(views, &centroids).mapv(|v| v.max(SQ_DIST_CLAMP)),
    };
    let u0 = if config.possibilistic { 0.5 } else { 1.0 };
    let mut state = MkpkmState {
        centroids,
        u: PossibilisticMatrix::filled(n, config.k, u0),
        alpha,
        w: Array2::zeros((n, config.k)),
        eta,
        s: config.schedule.s0,
        m: config.m,
        lambda: config.lambda,
    };
    state.w = compute_fuzzy_weights(views, &state);
    Ok(state)
}

/// What one sweep changed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub reseeded: Vec<(usize, usize)>,
}

/// One full sweep at the state's current `s`: fuzzy weights, then `U`,
/// centroids and `alpha`.
pub fn sweep(views: &MultiViewMapped, state: &mut MkpkmState, possibilistic: bool) -> SweepReport {
    state.w = compute_fuzzy_weights(views, state);
    if possibilistic {
        state.u = update_u(views, state);
    }
    let (centroids, reseeded) = update_centroids(views, state);
    state.centroids = centroids;
    state.alpha = update_alpha(views, state);
    SweepReport { reseeded }
}

/// Hard labels: `argmax_j w_ij u_ij^m` at the state, ties to the lowest index.
pub fn assignments(views: &MultiViewMapped, state: &MkpkmState) -> Vec<usize> {
    let dtilde = possibilistic_views(&view_distances(views, &state.centroids), state);
    let mut score = log_fuzzy_weights(&aggregate(&dtilde, state.alpha.as_slice()), state.s);
    for (g, u) in score.iter_mut().zip(state.u.as_array().iter()) {
        *g += state.m * u.ln();
    }
    argmax_rows(score.view())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkpkmTracePoint {
    pub iteration: usize,
    pub s: f64,
    pub objective: f64,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MkpkmResult {
    pub state: MkpkmState,
    pub assignments: Vec<usize>,
    pub trace: Vec<MkpkmTracePoint>,
    pub iterations_run: usize,
    pub converged: bool,
    pub dead_clusters: Vec<DeadClusterEvent>,
    pub feature_maps: Vec<RffMap>,
}

/// Maps every view with `specs[l]` and runs the solver.
///
/// All views draw their frequencies from `config.seed`, so views with equal
/// input dimension and bandwidth share one feature map.
pub fn fit_mkpkm(views: &[FeatureMatrix], specs: &[KernelSpec], config: &MkpkmConfig) -> Result<MkpkmResult> {
    if views.is_empty() {
        return Err(Error::invalid("at least one view is required"));
    }
    if specs.len() != views.len() {
        return Err(Error::invalid(format!(
            "{} kernels given for {} views",
            specs.len(),
            views.len()
        )));
    }
    let n = views[0].n_samples();
    if let Some((l, v)) = views.iter().enumerate().find(|(_, v)| v.n_samples() != n) {
        return Err(Error::invalid(format!("view {l} has {} rows, view 0 has {n}", v.n_samples())));
    }
    let dim = config.rff_dim_or_default();
    let mut maps = Vec::with_capacity(views.len());
    let mut mapped = Vec::with_capacity(views.len());
    for (x, spec) in views.iter().zip(specs) {
        let map = sample_rff(x.n_features(), dim, spec, config.seed)?;
        mapped.push(map_features(x, &map)?);
        maps.push(map);
    }
    let mut result = fit_mkpkm_mapped(&MultiViewMapped::new(mapped)?, config)?;
    result.feature_maps = maps;
    Ok(result)
}

pub fn fit_mkpkm_mapped(views: &MultiViewMapped, config: &MkpkmConfig) -> Result<MkpkmResult> {
    let state = initial_state(views, config)?;
    run_from(views, state, config)
}

/// Sweeps from `state` until the two-level stopping rule fires or `max_iter`.
pub fn run_from(views: &MultiViewMapped, mut state: MkpkmState, config: &MkpkmConfig) -> Result<MkpkmResult> {
    config.validate(views.n_views())?;
    let schedule = config.schedule;
    let mut labels = assignments(views, &state);
    let mut trace: Vec<MkpkmTracePoint> = Vec::new();
    let mut dead_clusters = Vec::new();
    let mut stable_for = 0usize;
    let mut converged = false;
    let mut iterations_run = 0;

    for t in 1..=config.max_iter {
        iterations_run = t;
        let report = sweep(views, &mut state, config.possibilistic);
        dead_clusters.extend(report.reseeded.iter().map(|&(cluster, reseeded_at)| DeadClusterEvent {
            iteration: t,
            cluster,
            reseeded_at,
        }));
        let f = mkpkm_objective(views, &state);
        if !f.is_finite() {
            return Err(Error::invalid(format!("objective became non-finite at iteration {t}")));
        }
        let next = assignments(views, &state);
        stable_for = if next == labels { stable_for + 1 } else { 0 };
        labels = next;
        let inner = matches!(trace.last(), Some(p) if p.s == state.s && (p.objective - f).abs() / f.abs().max(1e-12) < config.tol);
        trace.push(MkpkmTracePoint {
            iteration: t,
            s: state.s,
            objective: f,
            alpha: state.alpha.as_slice().to_vec(),
        });
        let outer = schedule.at_floor(state.s) || schedule.gamma == 1.0 || stable_for > schedule.cadence;
        if inner && outer && report.reseeded.is_empty() {
            converged = true;
            break;
        }
        state.s = schedule.advance(state.s, t);
        if config.refresh_eta {
            state.eta = estimate_eta(views, &state.centroids).mapv(|v| v.max(SQ_DIST_CLAMP));
        }
    }
    state.w = compute_fuzzy_weights(views, &state);

    Ok(MkpkmResult {
        state,
        assignments: labels,
        trace,
        iterations_run,
        converged,
        dead_clusters,
        feature_maps: Vec::new(),
    })
}
