//! Round trip through the file formats: write views as CSV, describe them in a
//! manifest, cluster, and persist the run.

use std::fs;

use rffkm::io::{load_manifest, read_run, write_run, DatasetManifest, LabelColumn, LabelEntry, RunRecord, ViewEntry};
use rffkm::metrics::score;
use rffkm::mkpkm::{fit_mkpkm, MkpkmConfig};
use rffkm::oracles::{make_blobs, BlobSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("rffkm-example-{}", std::process::id()));
    fs::create_dir_all(&dir)?;

    let blobs = make_blobs(&BlobSpec::new(200, 2, 3, 8.0, 3))?;
    let mut view_a = String::from("x,y,z\n");
    let mut view_b = String::new();
    let mut labels = String::from("class\n");
    for (row, label) in blobs.data.as_array().rows().into_iter().zip(&blobs.labels) {
        view_a.push_str(&format!("{},{},{}\n", row[0], row[1], row[2]));
        view_b.push_str(&format!("{},{}\n", row[0] + row[1], row[2] * 0.5));
        labels.push_str(&format!("{}\n", ["left", "right"][*label]));
    }
    fs::write(dir.join("a.csv"), view_a)?;
    fs::write(dir.join("b.csv"), view_b)?;
    fs::write(dir.join("labels.csv"), labels)?;

    let manifest = DatasetManifest {
        name: "two-blobs".into(),
        views: vec![
            ViewEntry { path: "a.csv".into(), format: None, sigma: Some(5.0), has_header: true },
            ViewEntry { path: "b.csv".into(), format: None, sigma: None, has_header: false },
        ],
        labels: Some(LabelEntry { path: "labels.csv".into(), has_header: true, column: LabelColumn::Name("class".into()) }),
    };
    fs::write(dir.join("manifest.json"), manifest.to_json()?)?;

    let dataset = load_manifest(dir.join("manifest.json"))?;
    let specs = dataset.kernel_specs(10.0)?;
    let config = MkpkmConfig::new(2).with_seed(3);
    let result = fit_mkpkm(&dataset.views, &specs, &config)?;
    let scores = dataset.labels.as_ref().map(|y| score(&result.assignments, y.as_slice())).transpose()?;

    let record = RunRecord::from_mkpkm(&dataset.name, &config, &specs, &result, scores);
    let paths = write_run(&record, dir.join("run"))?;
    println!("wrote {}", paths.record.display());
    println!("{}", fs::read_to_string(&paths.trace)?.lines().take(4).collect::<Vec<_>>().join("\n"));
    assert_eq!(read_run(dir.join("run"))?, record);
    println!("metrics: {:?}", record.metrics);

    fs::remove_dir_all(&dir)?;
    Ok(())
}
