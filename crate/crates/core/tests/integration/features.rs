use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rffkm::cli::unit_ball_points;
use rffkm::data::FeatureMatrix;
use rffkm::features::{gaussian_kernel, map_features, sample_rff, KernelSpec};
use rffkm::oracles::KernelMatrix;

use crate::common::gaussian;

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn averaging_over_seeds_is_unbiased() {
    let spec = KernelSpec::new(1.0).unwrap();
    let x = [0.3, -0.2, 0.5];
    let y = [-0.1, 0.4, 0.2];
    let exact = gaussian_kernel(x[..].into(), y[..].into(), &spec).unwrap();
    let mean = (0..200u64)
        .map(|seed| {
            let map = sample_rff(3, 64, &spec, seed).unwrap();
            inner(&map.map_point(x[..].into()).unwrap(), &map.map_point(y[..].into()).unwrap())
        })
        .sum::<f64>()
        / 200.0;
    assert!((mean - exact).abs() <= 0.02, "{mean} vs {exact}");
}

#[test]
fn inner_products_are_bounded_and_deterministic() {
    let x = gaussian(50, 4, 1);
    let spec = KernelSpec::new(0.7).unwrap();
    let map = sample_rff(4, 33, &spec, 9).unwrap();
    let a = map_features(&x, &map).unwrap();
    let b = map_features(&x, &sample_rff(4, 33, &spec, 9).unwrap()).unwrap();
    assert_eq!(a.matrix(), b.matrix());
    let g = a.matrix().dot(&a.matrix().t());
    assert!(g.iter().all(|v| v.abs() <= 1.0 + 1e-12));
}

#[test]
fn relative_error_medians_shrink_with_dimension() {
    let spec = KernelSpec::new(1.0).unwrap();
    let dims = [64, 256, 1024, 4096];
    let mut per_dim: Vec<Vec<f64>> = vec![Vec::new(); dims.len()];
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let xs = unit_ball_points(4, 100, &mut rng);
        let ys = unit_ball_points(4, 100, &mut rng);
        for (slot, &d) in dims.iter().enumerate() {
            let map = sample_rff(4, d, &spec, seed).unwrap();
            let worst = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let k = gaussian_kernel(x[..].into(), y[..].into(), &spec).unwrap();
                    let approx = inner(&map.map_point(x[..].into()).unwrap(), &map.map_point(y[..].into()).unwrap());
                    (approx - k).abs() / k
                })
                .fold(0.0, f64::max);
            per_dim[slot].push(worst);
        }
    }
    let medians: Vec<f64> = per_dim
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            0.5 * (v[9] + v[10])
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn kernel_matrices_are_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..10u64 {
        let n = rng.gen_range(2..=200);
        let d = rng.gen_range(1..6);
        let x = gaussian(n, d, case);
        let spec = KernelSpec::new(rng.gen_range(0.2..5.0)).unwrap();
        let k = KernelMatrix::new(&x, &spec).unwrap();
        let a = k.as_array();
        for i in 0..n {
            assert_eq!(a[[i, i]], 1.0);
            for j in 0..n {
                assert!((a[[i, j]] - a[[j, i]]).abs() <= 1e-12);
                assert!(a[[i, j]] > 0.0 && a[[i, j]] <= 1.0);
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
        let smallest = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        assert!(smallest >= -1e-8, "case {case}: {smallest}");
    }
}

#[test]
fn kernel_trick_cost_matches_mapped_cost() {
    use rffkm::oracles::{kkm_cost_features, kkm_cost_kernel};
    let x = FeatureMatrix::new(gaussian(30, 3, 8).as_array() * 0.8).unwrap();
    let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
    let spec = KernelSpec::new(1.0).unwrap();
    let exact = kkm_cost_kernel(&x, &labels, &spec).unwrap();
    let mapped = map_features(&x, &sample_rff(3, 20_000, &spec, 1).unwrap()).unwrap();
    let approx = kkm_cost_features(mapped.view(), &labels).unwrap();
    assert!((approx - exact).abs() <= 0.02 * exact, "{approx} vs {exact}");
}
