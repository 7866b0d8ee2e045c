use std::collections::BTreeMap;

use ndarray::Array2;
use proptest::prelude::*;

use rffkm::io::{RunConfig, RunRecord, RunTracePoint, SCHEMA_VERSION};
use rffkm::kpkm::{kpkm_step, KpkmConfig};
use rffkm::metrics::{accuracy, nmi, purity, Scores};
use rffkm::mkpkm::{typicality, ViewWeights};
use rffkm::powermeans::PowerSchedule;

fn labelings(max_k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..60usize).prop_flat_map(move |n| {
        (
            prop::collection::vec(0..max_k, n),
            prop::collection::vec(0..max_k, n),
        )
    })
}

fn relabel(v: &[usize], shift: usize, k: usize) -> Vec<usize> {
    v.iter().map(|x| (x + shift) % k).collect()
}

proptest! {
    #[test]
    fn accuracy_and_nmi_ignore_label_names((pred, truth) in labelings(5), shift in 1..5usize) {
        let acc = accuracy(&pred, &truth).unwrap();
        prop_assert_eq!(acc, accuracy(&relabel(&pred, shift, 5), &truth).unwrap());
        prop_assert_eq!(acc, accuracy(&pred, &relabel(&truth, shift, 5)).unwrap());
        let a = nmi(&pred, &truth).unwrap();
        let b = nmi(&relabel(&pred, shift, 5), &relabel(&truth, shift, 5)).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((a - nmi(&truth, &pred).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn purity_bounds((pred, truth) in labelings(6)) {
        let p = purity(&pred, &truth).unwrap();
        let classes = truth.iter().collect::<std::collections::BTreeSet<_>>().len() as f64;
        prop_assert!(p >= 1.0 / classes - 1e-12);
        prop_assert!(accuracy(&pred, &truth).unwrap() <= p + 1e-12);
    }

    #[test]
    fn step_keeps_centroids_in_the_hull(
        n in 3..25usize,
        k in 1..4usize,
        s in -60.0..-0.5f64,
        seed in 0..1000u64,
    ) {
        prop_assume!(k <= n);
        let mut x = seed;
        let mut next = move || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let points = Array2::from_shape_simple_fn((n, 4), &mut next);
        let centroids = Array2::from_shape_simple_fn((k, 4), &mut next);
        let step = kpkm_step(points.view(), centroids.view(), s);
        let w = step.membership.as_array();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        for col in w.columns() {
            prop_assert!((col.sum() - 1.0).abs() < 1e-9);
        }
        let combo = w.t().dot(&points);
        for (a, b) in combo.iter().zip(step.centroids.iter()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn schedule_never_passes_its_floor(s0 in 0.1..50.0f64, gamma in 1.0..2.0f64, cadence in 1..5usize) {
        let sched = PowerSchedule::new(-s0, gamma, cadence, -1e3).unwrap();
        let mut s = sched.s0;
        for t in 1..400 {
            let next = sched.advance(s, t);
            prop_assert!(next <= s && next >= sched.s_floor);
            s = next;
        }
    }

    #[test]
    fn view_weights_stay_on_the_simplex(
        costs in prop::collection::vec(-1e6..1e6f64, 1..6),
        lambda in 1e-3..1e3f64,
    ) {
        let a = ViewWeights::from_costs(&costs, lambda);
        let sum: f64 = a.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(a.as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let best = costs.iter().enumerate().min_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        let top = a.as_slice().iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(a.as_slice()[best], top);
    }

    #[test]
    fn typicality_is_a_probability(a in 0.0..1e6f64, b in 1e-9..1e6f64, m in 1.05..5.0f64) {
        let u = typicality(a, b, m);
        prop_assert!(u > 0.0 && u <= 1.0);
    }

    #[test]
    fn run_records_round_trip(
        seed in any::<u64>(),
        objectives in prop::collection::vec(-1e300..1e300f64, 1..20),
        alpha in 0.0..1.0f64,
        assignments in prop::collection::vec(0..10usize, 0..50),
        acc in 0.0..1.0f64,
    ) {
        let trace = objectives
            .iter()
            .enumerate()
            .map(|(i, &objective)| RunTracePoint {
                iteration: i + 1,
                s: -15.0 * 1.04f64.powi(i as i32 / 2),
                objective,
                alpha: vec![alpha, 1.0 - alpha],
            })
            .collect::<Vec<_>>();
        let record = RunRecord {
            schema_version: SCHEMA_VERSION,
            solver: "rff-kpkm".into(),
            dataset: "p".into(),
            config: RunConfig::from_kpkm(&KpkmConfig::new(4).with_seed(seed)),
            seed,
            iterations_run: trace.len(),
            converged: seed % 2 == 0,
            trace,
            assignments,
            metrics: Some(Scores { acc, nmi: acc / 3.0, purity: acc.sqrt() }),
            timings: BTreeMap::from([("fit".to_string(), acc * 7.0)]),
        };
        let back = RunRecord::from_json(&record.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, record);
    }
}
