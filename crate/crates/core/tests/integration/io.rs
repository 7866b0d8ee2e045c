use std::fs;

use rffkm::error::Error;
use rffkm::io::{
    load_manifest, read_assignments, read_run, write_run, DatasetManifest, DirLock, LabelColumn, LabelEntry,
    RunRecord, ViewEntry, ViewFormat,
};
use rffkm::kpkm::{fit_kpkm, KpkmConfig};
use rffkm::metrics::score;
use rffkm::oracles::{make_blobs, BlobSpec};

use crate::common::{gaussian, write_matrix};

fn view(path: &str) -> ViewEntry {
    ViewEntry {
        path: path.into(),
        format: None,
        sigma: None,
        has_header: false,
    }
}

#[test]
fn two_view_manifest_loads_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("data")).unwrap();
    write_matrix(&dir.path().join("data/a.csv"), &gaussian(100, 3, 1), None);
    write_matrix(&dir.path().join("data/b.csv"), &gaussian(100, 7, 2), None);
    let labels: String = (0..100).map(|i| format!("{}\n", ["cat", "dog"][i % 2])).collect();
    fs::write(dir.path().join("data/y.csv"), labels).unwrap();

    let manifest = DatasetManifest {
        name: "pair".into(),
        views: vec![
            ViewEntry {
                sigma: Some(0.5),
                ..view("data/a.csv")
            },
            view("data/b.csv"),
        ],
        labels: Some(LabelEntry {
            path: "data/y.csv".into(),
            has_header: false,
            column: LabelColumn::Index(0),
        }),
    };
    let path = dir.path().join("m.json");
    fs::write(&path, manifest.to_json().unwrap()).unwrap();

    let ds = load_manifest(&path).unwrap();
    assert_eq!((ds.views.len(), ds.n_samples()), (2, 100));
    assert_eq!((ds.views[0].n_features(), ds.views[1].n_features()), (3, 7));
    let specs = ds.kernel_specs(1e3).unwrap();
    assert_eq!((specs[0].bandwidth, specs[1].bandwidth), (0.5, 1e3));
    let y = ds.labels.unwrap();
    assert_eq!(&y.as_slice()[..4], &[0, 1, 0, 1]);
    // rows are kept in file order
    assert_eq!(ds.views[0].as_array(), gaussian(100, 3, 1).as_array());
}

#[test]
fn manifest_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_matrix(&dir.path().join("a.csv"), &gaussian(100, 3, 1), None);
    write_matrix(&dir.path().join("b.csv"), &gaussian(99, 3, 2), None);

    let mismatch = DatasetManifest {
        name: "bad".into(),
        views: vec![view("a.csv"), view("b.csv")],
        labels: None,
    };
    let path = dir.path().join("m.json");
    fs::write(&path, mismatch.to_json().unwrap()).unwrap();
    match load_manifest(&path) {
        Err(Error::Validation(msg)) => assert!(msg.contains("a.csv") && msg.contains("b.csv"), "{msg}"),
        other => panic!("{other:?}"),
    }

    fs::write(&path, r#"{"name": "empty", "views": []}"#).unwrap();
    assert!(matches!(load_manifest(&path), Err(Error::Validation(_))));

    fs::write(&path, r#"{"name": "x", "views": [{"path": "a.csv", "sigma": -1}]}"#).unwrap();
    assert!(matches!(load_manifest(&path), Err(Error::Validation(_))));

    fs::write(&path, r#"{"name": "x", "views": [{"path": "missing.csv"}]}"#).unwrap();
    match load_manifest(&path) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("missing.csv")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn explicit_gzip_format_is_honored() {
    use std::io::Write;
    let dir = tempfile::tempdir().unwrap();
    let mut enc = flate2::write::GzEncoder::new(
        fs::File::create(dir.path().join("packed.bin")).unwrap(),
        flate2::Compression::fast(),
    );
    enc.write_all(b"1,2\n3,4\n").unwrap();
    enc.finish().unwrap();
    let m = DatasetManifest {
        name: "gz".into(),
        views: vec![ViewEntry {
            format: Some(ViewFormat::CsvGz),
            ..view("packed.bin")
        }],
        labels: None,
    };
    let path = dir.path().join("m.json");
    fs::write(&path, m.to_json().unwrap()).unwrap();
    assert_eq!(load_manifest(&path).unwrap().views[0].n_samples(), 2);
}

fn sample_record() -> RunRecord {
    let b = make_blobs(&BlobSpec::new(60, 2, 2, 8.0, 4)).unwrap();
    let cfg = KpkmConfig::new(2).with_seed(4);
    let r = fit_kpkm(&b.data, &cfg).unwrap();
    let scores = score(&r.assignments, &b.labels).unwrap();
    let mut rec = RunRecord::from_kpkm("blobs", &cfg, &r, Some(scores));
    rec.timings.insert("fit".into(), 0.125);
    rec
}

#[test]
fn written_run_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let rec = sample_record();
    let paths = write_run(&rec, dir.path().join("run")).unwrap();
    for p in [&paths.record, &paths.assignments, &paths.trace] {
        assert!(p.exists());
    }
    assert_eq!(read_run(dir.path().join("run")).unwrap(), rec);
    assert_eq!(read_assignments(&paths.assignments).unwrap(), rec.assignments);

    let trace = fs::read_to_string(&paths.trace).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "iter\ts\tobjective\talpha_1");
    assert_eq!(lines.count(), rec.iterations_run);
    assert!(!dir.path().join("run/.rffkm.lock").exists());
}

#[test]
fn unwritable_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    assert!(matches!(write_run(&sample_record(), blocker.join("sub")), Err(Error::Io { .. })));
}

#[test]
fn concurrent_writer_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let lock = DirLock::acquire(dir.path()).unwrap();
    assert!(matches!(write_run(&sample_record(), dir.path()), Err(Error::Io { .. })));
    drop(lock);
    write_run(&sample_record(), dir.path()).unwrap();
}

#[test]
fn non_finite_trace_is_rejected() {
    let mut rec = sample_record();
    rec.trace[0].objective = f64::NAN;
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(write_run(&rec, dir.path()), Err(Error::Validation(_))));
}
