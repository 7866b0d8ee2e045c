//! Shift-invariant kernels and their random Fourier feature maps.
//!
//! A map draws `D` frequency vectors from the kernel's spectral density and
//! sends `x` to `sqrt(1/D) * (sin(w_1.x), cos(w_1.x), ..., sin(w_D.x), cos(w_D.x))`,
//! a `2D`-vector whose inner products estimate the kernel without bias. Every
//! mapped row has unit norm because each sin/cos pair contributes exactly `1/D`.
//!
//! Frequencies come from a ChaCha8 stream seeded per map, so the same
//! `(seed, D, d, bandwidth)` always reproduces the same frequency matrix.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Bandwidth used when none is configured.
pub const DEFAULT_BANDWIDTH: f64 = 1e3;

/// A kernel `k(x, y) = K(x - y)` that can be approximated with random features.
pub trait ShiftInvariantKernel {
    fn evaluate(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64>;

    /// Draws `count` frequency vectors of dimension `dim` from the spectral density.
    fn sample_frequencies(&self, dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Array2<f64>;
}

/// Gaussian kernel `exp(-||x - y||^2 / (2 sigma^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::invalid(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KernelSpec { bandwidth })
    }

    /// Kernel value from a precomputed squared distance.
    pub fn from_sq_dist(&self, sq_dist: f64) -> f64 {
        (-sq_dist / (2.0 * self.bandwidth * self.bandwidth)).exp()
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            bandwidth: DEFAULT_BANDWIDTH,
        }
    }
}

impl ShiftInvariantKernel for KernelSpec {
    fn evaluate(&self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
        gaussian_kernel(x, y, self)
    }

    fn sample_frequencies(&self, dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let scale = self.bandwidth.recip();
        Array2::from_shape_simple_fn((count, dim), || {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
    }
}

pub fn gaussian_kernel(
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
    spec: &KernelSpec,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "kernel arguments differ in dimension: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let sq: f64 = x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(spec.from_sq_dist(sq))
}

/// Sampled random Fourier feature map for one input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RffMap {
    frequencies: Array2<f64>,
    kernel: KernelSpec,
    seed: u64,
}

impl RffMap {
    /// Number of sampled frequencies `D`. Mapped vectors have length `2D`.
    pub fn dim(&self) -> usize {
        self.frequencies.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.frequencies.ncols()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.dim()
    }

    pub fn frequencies(&self) -> ArrayView2<'_, f64> {
        self.frequencies.view()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Maps one input vector into `out`, which must have length `2D`.
    pub fn map_into(&self, x: ArrayView1<'_, f64>, out: &mut [f64]) {
        let scale = (self.dim() as f64).recip().sqrt();
        for (omega, pair) in self.frequencies.outer_iter().zip(out.chunks_exact_mut(2)) {
            let (sin, cos) = omega.dot(&x).sin_cos();
            pair[0] = scale * sin;
            pair[1] = scale * cos;
        }
    }

    pub fn map_point(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "point has dimension {}, map expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut out = vec![0.0; self.output_dim()];
        self.map_into(x, &mut out);
        Ok(out)
    }
}

/// Draws a Gaussian-kernel feature map with `num_features` frequencies for `input_dim` inputs.
pub fn sample_rff(input_dim: usize, num_features: usize, spec: &KernelSpec, seed: u64) -> Result<RffMap> {
    if input_dim == 0 || num_features == 0 {
        return Err(Error::invalid(format!(
            "rff needs positive dimensions, got d={input_dim}, D={num_features}"
        )));
    }
    let spec = KernelSpec::new(spec.bandwidth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frequencies = spec.sample_frequencies(input_dim, num_features, &mut rng);
    Ok(RffMap {
        frequencies,
        kernel: spec,
        seed,
    })
}

/// Rows of a feature matrix pushed through an [`RffMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct MappedFeatures {
    matrix: Array2<f64>,
    map: RffMap,
}

impl MappedFeatures {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn map(&self) -> &RffMap {
        &self.map
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn width(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn map_features(x: &FeatureMatrix, map: &RffMap) -> Result<MappedFeatures> {
    if x.n_features() != map.input_dim() {
        return Err(Error::invalid(format!(
            "feature matrix has {} columns, map expects {}",
            x.n_features(),
            map.input_dim()
        )));
    }
    let width = map.output_dim();
    let mut flat = vec![0.0; x.n_samples() * width];
    flat.par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, out)| map.map_into(x.row(i), out));
    let matrix = Array2::from_shape_vec((x.n_samples(), width), flat)
        .expect("buffer sized from shape");
    Ok(MappedFeatures {
        matrix,
        map: map.clone(),
    })
}

/// Default number of frequencies for `k` clusters: `ceil(4 ln(2k)^3)`.
pub fn recommended_dim(k: usize) -> usize {
    let k = k.max(1) as f64;
    (4.0 * (2.0 * k).ln().powi(3)).ceil() as usize
}
