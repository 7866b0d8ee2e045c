use ndarray::{array, Array2, Axis};

use rffkm::data::FeatureMatrix;
use rffkm::features::{map_features, recommended_dim, sample_rff, KernelSpec};
use rffkm::geometry::{argmin_rows, sq_distances};
use rffkm::kpkm::{fit_kpkm, fit_kpkm_mapped, init_centroids, KpkmConfig};
use rffkm::metrics::accuracy;
use rffkm::mkpkm::{fit_mkpkm, fit_mkpkm_mapped, MkpkmConfig, MultiViewMapped};
use rffkm::oracles::{exact_kpkm, make_blobs, BlobSpec};
use rffkm::powermeans::PowerSchedule;

#[test]
fn init_puts_one_centroid_on_each_far_blob() {
    let mut good = 0;
    for seed in 0..20u64 {
        let b = make_blobs(&BlobSpec::new(200, 2, 2, 40.0, seed)).unwrap();
        let spec = KernelSpec::new(10.0).unwrap();
        let map = sample_rff(2, recommended_dim(2), &spec, seed).unwrap();
        let phi = map_features(&b.data, &map).unwrap();
        let init = init_centroids(&phi, 2, seed).unwrap();
        let nearest = argmin_rows(sq_distances(phi.view(), init.view()).view());
        if accuracy(&nearest, &b.labels).unwrap() == 1.0 {
            good += 1;
        }
        // the same seed reproduces the same centroids
        assert_eq!(init, init_centroids(&phi, 2, seed).unwrap());
    }
    assert!(good >= 18, "{good}/20");
}

#[test]
fn single_cluster_fit_is_the_mapped_mean() {
    let b = make_blobs(&BlobSpec::new(50, 2, 3, 5.0, 1)).unwrap();
    let cfg = KpkmConfig::new(1).with_kernel(KernelSpec::new(4.0).unwrap());
    let map = sample_rff(3, cfg.rff_dim_or_default(), &cfg.kernel, cfg.seed).unwrap();
    let phi = map_features(&b.data, &map).unwrap();
    let r = fit_kpkm_mapped(&phi, &cfg).unwrap();
    let mean = phi.matrix().mean_axis(Axis(0)).unwrap();
    for (a, m) in r.centroids.row(0).iter().zip(mean.iter()) {
        assert!((a - m).abs() < 1e-12);
    }
    let variance_sum: f64 = phi.matrix().rows().into_iter().map(|row| (&row - &mean).mapv(|v| v * v).sum()).sum();
    let last = r.trace.last().unwrap().objective;
    assert!((last - variance_sum).abs() <= 1e-9 * variance_sum);
    assert!(r.converged);
}

#[test]
fn fitted_membership_is_column_stochastic_and_spans_centroids() {
    let b = make_blobs(&BlobSpec::new(120, 3, 2, 5.0, 2)).unwrap();
    let cfg = KpkmConfig::new(3).with_seed(2).with_kernel(KernelSpec::new(3.0).unwrap());
    let r = fit_kpkm(&b.data, &cfg).unwrap();
    let w = r.membership.as_array();
    assert!(w.iter().all(|&v| v >= 0.0));
    for col in w.columns() {
        assert!((col.sum() - 1.0).abs() < 1e-9);
    }
    let phi = map_features(&b.data, r.feature_map.as_ref().unwrap()).unwrap();
    let hull = r.membership.centroids(phi.view());
    for (a, c) in hull.iter().zip(r.centroids.iter()) {
        assert!((a - c).abs() < 1e-12);
    }
}

#[test]
fn annealed_assignments_are_nearest_centroid() {
    let b = make_blobs(&BlobSpec::new(150, 3, 2, 3.0, 3)).unwrap();
    let floor = PowerSchedule::new(-1e6, 1.04, 3, -1e6).unwrap();
    let cfg = KpkmConfig::new(3).with_seed(3).with_kernel(KernelSpec::new(2.0).unwrap()).with_schedule(floor);
    let r = fit_kpkm(&b.data, &cfg).unwrap();
    let phi = map_features(&b.data, r.feature_map.as_ref().unwrap()).unwrap();
    let nearest = argmin_rows(sq_distances(phi.view(), r.centroids.view()).view());
    assert_eq!(nearest, r.assignments);
}

#[test]
fn exact_oracle_agrees_on_separated_pairs() {
    let x = FeatureMatrix::new(array![[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.0, 0.1], [0.0, 20.0]]).unwrap();
    let cfg = KpkmConfig::new(3).with_kernel(KernelSpec::new(1.0).unwrap()).with_rff_dim(8192).with_seed(5);
    let approx = fit_kpkm(&x, &cfg).unwrap();
    let exact = exact_kpkm(&x, &cfg).unwrap();
    assert_eq!(accuracy(&approx.assignments, &exact.assignments).unwrap(), 1.0);
    assert_eq!(accuracy(&approx.assignments, &[0, 0, 1, 1, 2]).unwrap(), 1.0);
}

#[test]
fn frozen_typicality_single_view_matches_single_view_solver() {
    for seed in 0..5u64 {
        let b = make_blobs(&BlobSpec::new(150, 3, 2, 10.0, seed)).unwrap();
        let spec = KernelSpec::default();
        let schedule = PowerSchedule::single_view();
        let kcfg = KpkmConfig::new(3).with_seed(seed).with_schedule(schedule);
        let single = fit_kpkm(&b.data, &kcfg).unwrap();
        let mcfg = MkpkmConfig::new(3).with_seed(seed).with_schedule(schedule).with_possibilistic(false);
        let multi = fit_mkpkm(&[b.data.clone()], &[spec], &mcfg).unwrap();
        assert!(multi.state.u.as_array().iter().all(|&u| u == 1.0));
        assert_eq!(multi.assignments, single.assignments, "seed {seed}");
    }
}

#[test]
fn multi_view_invariants_after_fit() {
    let b = make_blobs(&BlobSpec::new(90, 3, 2, 6.0, 8)).unwrap();
    let spec = KernelSpec::new(3.0).unwrap();
    let cfg = MkpkmConfig::new(3).with_seed(8).with_lambda(0.5);
    let maps: Vec<_> = [0u64, 1]
        .iter()
        .map(|&off| sample_rff(2, cfg.rff_dim_or_default(), &spec, 8 + off).unwrap())
        .collect();
    let mapped = maps.iter().map(|m| map_features(&b.data, m).unwrap()).collect();
    let views = MultiViewMapped::new(mapped).unwrap();
    let r = fit_mkpkm_mapped(&views, &cfg).unwrap();
    let alpha = r.state.alpha.as_slice();
    assert!(alpha.iter().all(|&a| a >= 0.0));
    assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(r.state.u.as_array().iter().all(|&u| u > 0.0 && u <= 1.0));
    assert!(r.trace.iter().all(|p| p.objective.is_finite()));
    assert_eq!(r.iterations_run, r.trace.len());

    // centroids stay inside the convex hull: coordinates are bounded by the data's
    for l in 0..2 {
        let x = views.view(l);
        let lo = x.fold_axis(Axis(0), f64::INFINITY, |a, b| a.min(*b));
        let hi = x.fold_axis(Axis(0), f64::NEG_INFINITY, |a, b| a.max(*b));
        for row in r.state.centroids[l].rows() {
            for ((v, a), b) in row.iter().zip(lo.iter()).zip(hi.iter()) {
                assert!(*v >= a - 1e-12 && *v <= b + 1e-12);
            }
        }
    }
}

#[test]
fn solver_inputs_are_validated() {
    let x = FeatureMatrix::new(Array2::zeros((4, 2))).unwrap();
    assert!(fit_kpkm(&x, &KpkmConfig::new(5)).is_err());
    assert!(fit_kpkm(&x, &KpkmConfig::new(0)).is_err());
    assert!(fit_kpkm(&x, &KpkmConfig::new(2).with_tol(0.0)).is_err());
    let spec = KernelSpec::default();
    assert!(fit_mkpkm(&[], &[], &MkpkmConfig::new(2)).is_err());
    assert!(fit_mkpkm(&[x.clone()], &[spec], &MkpkmConfig::new(9)).is_err());
    let big = FeatureMatrix::new(Array2::zeros((2001, 1))).unwrap();
    assert!(exact_kpkm(&big, &KpkmConfig::new(2)).is_err());
}
