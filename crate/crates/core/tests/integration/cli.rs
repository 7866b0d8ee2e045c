use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rffkm::io::{read_run, DatasetManifest, LabelColumn, LabelEntry, RunRecord, ViewEntry};
use rffkm::oracles::{make_blobs, BlobSpec};

use crate::common::{gaussian, standardize, write_matrix};

fn rffkm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rffkm"))
        .args(args)
        .env("RFFKM_OUT_DIR", out)
        .output()
        .unwrap()
}

fn blobs_csv(dir: &Path, seed: u64) -> PathBuf {
    let b = make_blobs(&BlobSpec::new(300, 3, 2, 10.0, seed)).unwrap();
    write_matrix(&dir.join("blobs.csv"), &b.data, Some(&b.labels))
}

fn tsv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

fn without_timings(mut r: RunRecord) -> String {
    r.timings.clear();
    r.to_json().unwrap()
}

#[test]
fn cluster_single_over_twenty_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let data = blobs_csv(dir.path(), 1);
    let out = dir.path().join("out");
    let o = rffkm(&["cluster-single", "--data", data.to_str().unwrap(), "--label-column", "2", "-k", "3"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for seed in 0..20 {
        assert!(out.join(format!("seed_{seed}/record.json")).exists());
    }
    let summary = tsv_rows(&out.join("summary.tsv"));
    assert_eq!(summary.len(), 1);
    let acc: f64 = summary[0][2].parse().unwrap();
    assert!(acc >= 0.95, "mean ACC {acc}");
    assert_eq!(tsv_rows(&out.join("per_seed.tsv")).len(), 20);
}

#[test]
fn single_seed_gives_one_record_and_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = blobs_csv(dir.path(), 2);
    let args = |out: &str| {
        vec![
            "--jobs".to_string(),
            "2".into(),
            "cluster-single".into(),
            "--data".into(),
            data.to_str().unwrap().into(),
            "-k".into(),
            "3".into(),
            "--seeds".into(),
            "1".into(),
            "--seed".into(),
            "7".into(),
            "--out-dir".into(),
            dir.path().join(out).to_str().unwrap().into(),
        ]
    };
    for out in ["a", "b"] {
        let a = args(out);
        let o = rffkm(&a.iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let entries: Vec<_> = fs::read_dir(dir.path().join("a")).unwrap().filter_map(|e| e.ok()).collect();
    let seeds: Vec<_> = entries.iter().filter(|e| e.file_name().to_string_lossy().starts_with("seed_")).collect();
    assert_eq!(seeds.len(), 1);
    let a = read_run(dir.path().join("a/seed_7")).unwrap();
    let b = read_run(dir.path().join("b/seed_7")).unwrap();
    assert!(a.metrics.is_none());
    assert_eq!(without_timings(a), without_timings(b));
    assert_eq!(
        fs::read(dir.path().join("a/seed_7/trace.tsv")).unwrap(),
        fs::read(dir.path().join("b/seed_7/trace.tsv")).unwrap()
    );
}

#[test]
fn missing_file_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = rffkm(&["cluster-single", "--data", "/no/such/input.csv", "-k", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/input.csv"));

    let o = rffkm(&["cluster-multi", "--manifest", "/no/such/m.json", "-k", "2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/m.json"));
}

#[test]
fn solver_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_matrix(&dir.path().join("tiny.csv"), &gaussian(3, 2, 0), None);
    let o = rffkm(&["cluster-single", "--data", data.to_str().unwrap(), "-k", "5", "--seeds", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

fn manifest(dir: &Path, second: &str) -> PathBuf {
    let m = DatasetManifest {
        name: "fixture".into(),
        views: ["a.csv", second]
            .iter()
            .map(|p| ViewEntry {
                path: p.into(),
                format: None,
                sigma: None,
                has_header: false,
            })
            .collect(),
        labels: Some(LabelEntry {
            path: "y.csv".into(),
            has_header: false,
            column: LabelColumn::Index(0),
        }),
    };
    let path = dir.join(format!("{second}.json"));
    fs::write(&path, m.to_json().unwrap()).unwrap();
    path
}

fn multi_fixture(dir: &Path, seed: u64) {
    let b = make_blobs(&BlobSpec::new(300, 3, 2, 10.0, seed)).unwrap();
    write_matrix(&dir.join("a.csv"), &standardize(&b.data), None);
    write_matrix(&dir.join("noise.csv"), &gaussian(300, 2, 99), None);
    let y: String = b.labels.iter().map(|l| format!("{l}\n")).collect();
    fs::write(dir.join("y.csv"), y).unwrap();
}

#[test]
fn identical_views_report_uniform_alpha() {
    let dir = tempfile::tempdir().unwrap();
    multi_fixture(dir.path(), 3);
    let m = manifest(dir.path(), "a.csv");
    let out = dir.path().join("out");
    let o = rffkm(&["cluster-multi", "--manifest", m.to_str().unwrap(), "-k", "3", "--seeds", "5"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in tsv_rows(&out.join("per_seed.tsv")) {
        for a in &row[7..9] {
            let a: f64 = a.parse().unwrap();
            assert!((a - 0.5).abs() <= 1e-6);
        }
    }
}

#[test]
fn informative_view_outweighs_noise() {
    let dir = tempfile::tempdir().unwrap();
    multi_fixture(dir.path(), 4);
    let m = manifest(dir.path(), "noise.csv");
    let out = dir.path().join("out");
    let o = rffkm(&["cluster-multi", "--manifest", m.to_str().unwrap(), "-k", "3", "--seeds", "9"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = tsv_rows(&out.join("per_seed.tsv"));
    let wins = rows
        .iter()
        .filter(|r| r[7].parse::<f64>().unwrap() > r[8].parse::<f64>().unwrap())
        .count();
    assert!(wins * 2 > rows.len(), "{wins}/{}", rows.len());
    let summary = tsv_rows(&out.join("summary.tsv"));
    assert!(summary[0][5].parse::<f64>().unwrap() > summary[0][6].parse::<f64>().unwrap());
}

#[test]
fn lambda_sweep_gives_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    multi_fixture(dir.path(), 5);
    let m = manifest(dir.path(), "noise.csv");
    let out = dir.path().join("out");
    let o = rffkm(
        &["cluster-multi", "--manifest", m.to_str().unwrap(), "-k", "3", "--seeds", "2", "--lambda-sweep"],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = tsv_rows(&out.join("summary.tsv"));
    let settings: Vec<&str> = summary.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(settings, ["lambda=0.1", "lambda=1", "lambda=10", "lambda=100", "lambda=1000"]);
    assert!(out.join("lambda_100/seed_1/record.json").exists());
    assert_eq!(tsv_rows(&out.join("per_seed.tsv")).len(), 10);
}

#[test]
fn dim_sweep_single_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let data = blobs_csv(dir.path(), 6);
    let out = dir.path().join("out");
    let o = rffkm(
        &["dim-sweep", "--data", data.to_str().unwrap(), "--label-column", "2", "-k", "3", "--dims", "8", "--seeds", "4"],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = tsv_rows(&out.join("dim_sweep.tsv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "8");

    let o = rffkm(&["dim-sweep", "--data", data.to_str().unwrap(), "-k", "3", "--dims", "8"], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rff_probe_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = rffkm(&["rff-probe", "--dims", "64,256,20000", "--pairs", "100", "--seed", "3"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = tsv_rows(&dir.path().join("rff_probe.tsv"));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let max_abs: f64 = r[1].parse().unwrap();
        let max_rel: f64 = r[2].parse().unwrap();
        assert!(max_abs > 0.0 && max_abs.is_finite() && max_rel.is_finite());
    }
    assert!(rows[2][1].parse::<f64>().unwrap() <= 0.03);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 4);
}

#[test]
fn help_explains_s0_sign() {
    let dir = tempfile::tempdir().unwrap();
    let o = rffkm(&["cluster-single", "--help"], dir.path());
    assert!(String::from_utf8_lossy(&o.stdout).contains("s = -|s0|"));
}
