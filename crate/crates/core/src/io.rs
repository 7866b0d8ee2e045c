//! Dataset loading and run persistence.
//!
//! Feature matrices come from CSV files (optionally gzip-compressed), multi-view
//! datasets from a JSON manifest that lists one CSV per view. Finished runs are
//! written as a JSON record, an assignments CSV and a tab-separated trace.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::features::KernelSpec;
use crate::kpkm::{KpkmConfig, KpkmResult};
use crate::metrics::Scores;
use crate::mkpkm::{MkpkmConfig, MkpkmResult};

pub const SCHEMA_VERSION: u32 = 1;

pub const RECORD_FILE: &str = "record.json";
pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const TRACE_FILE: &str = "trace.tsv";
const LOCK_FILE: &str = ".rffkm.lock";

/// Which column of a CSV file holds class labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

fn has_gz_extension(path: &Path) -> bool {
    path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("gz"))
}

fn open_reader(path: &Path, gzip: bool) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    if gzip {
        Ok(Box::new(GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn dense_labels(raw: Vec<String>) -> Result<LabelVector> {
    let numeric: Option<Vec<i64>> = raw.iter().map(|v| v.parse::<i64>().ok()).collect();
    match numeric {
        Some(values) => LabelVector::dense_from(&values),
        None => LabelVector::dense_from(&raw),
    }
}

/// Reads a numeric CSV file into a feature matrix.
///
/// Files ending in `.gz` are decompressed on the fly. When `label_column` is
/// given, that column is removed from the features and returned as a dense
/// label vector. Only `.` is accepted as the decimal separator.
pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<&LabelColumn>,
) -> Result<(FeatureMatrix, Option<LabelVector>)> {
    let path = path.as_ref();
    read_csv(path, has_gz_extension(path), has_header, label_column)
}

struct Table {
    rows: usize,
    values: Vec<f64>,
    labels: Vec<String>,
}

fn read_csv(
    path: &Path,
    gzip: bool,
    has_header: bool,
    label_column: Option<&LabelColumn>,
) -> Result<(FeatureMatrix, Option<LabelVector>)> {
    let table = read_table(path, gzip, has_header, label_column)?;
    let cols = table.values.len() / table.rows;
    if cols == 0 {
        return Err(parse_error(path, 1, "no feature columns"));
    }
    let matrix =
        Array2::from_shape_vec((table.rows, cols), table.values).map_err(|e| Error::invalid(e.to_string()))?;
    let labels = label_column.map(|_| dense_labels(table.labels)).transpose()?;
    Ok((FeatureMatrix::new(matrix)?, labels))
}

/// Reads only the label column of a CSV file, dense-relabeled.
pub fn load_labels(path: impl AsRef<Path>, has_header: bool, column: &LabelColumn) -> Result<LabelVector> {
    let path = path.as_ref();
    let table = read_table(path, has_gz_extension(path), has_header, Some(column))?;
    dense_labels(table.labels)
}

fn read_table(path: &Path, gzip: bool, has_header: bool, label_column: Option<&LabelColumn>) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(open_reader(path, gzip)?);

    let label_idx = match label_column {
        None => None,
        Some(LabelColumn::Index(i)) => Some(*i),
        Some(LabelColumn::Name(name)) => {
            if !has_header {
                return Err(parse_error(path, 1, format!("label column {name:?} named but file has no header")));
            }
            let headers = reader.headers().map_err(|e| parse_error(path, 1, e.to_string()))?;
            let idx = headers.iter().position(|h| h == name);
            Some(idx.ok_or_else(|| parse_error(path, 1, format!("no column named {name:?}")))?)
        }
    };

    let mut width = None;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(parse_error(path, line, format!("expected {w} fields, found {}", record.len())));
            }
            _ => {}
        }
        if let Some(li) = label_idx {
            let label = record
                .get(li)
                .ok_or_else(|| parse_error(path, line, format!("missing label column {li}")))?;
            labels.push(label.to_string());
        }
        for (c, cell) in record.iter().enumerate() {
            if Some(c) == label_idx {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(path, line, format!("non-numeric value {cell:?} in column {c}")))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("non-finite value {cell:?} in column {c}")));
            }
            values.push(v);
        }
        rows += 1;
    }

    if rows == 0 {
        return Err(parse_error(path, 1, "no data rows"));
    }
    Ok(Table { rows, values, labels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewFormat {
    Csv,
    CsvGz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEntry {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<ViewFormat>,
    /// Per-view kernel bandwidth; the run-wide default applies when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub has_header: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub path: PathBuf,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default = "LabelEntry::first_column")]
    pub column: LabelColumn,
}

impl LabelEntry {
    fn first_column() -> LabelColumn {
        LabelColumn::Index(0)
    }
}

/// JSON description of a multi-view dataset. Relative paths are resolved
/// against the directory containing the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub views: Vec<ViewEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelEntry>,
}

impl DatasetManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    pub name: String,
    pub views: Vec<FeatureMatrix>,
    pub sigmas: Vec<Option<f64>>,
    pub labels: Option<LabelVector>,
}

impl MultiViewDataset {
    pub fn n_samples(&self) -> usize {
        self.views[0].n_samples()
    }

    /// Kernel per view: the manifest override if present, else `default_sigma`.
    pub fn kernel_specs(&self, default_sigma: f64) -> Result<Vec<KernelSpec>> {
        self.sigmas.iter().map(|s| KernelSpec::new(s.unwrap_or(default_sigma))).collect()
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = DatasetManifest::from_json(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    if manifest.views.is_empty() {
        return Err(Error::Validation(format!("manifest {} lists no views", path.display())));
    }

    let mut views = Vec::with_capacity(manifest.views.len());
    let mut sigmas = Vec::with_capacity(manifest.views.len());
    for (l, entry) in manifest.views.iter().enumerate() {
        if let Some(sigma) = entry.sigma {
            KernelSpec::new(sigma).map_err(|_| Error::Validation(format!("view {l}: bad sigma {sigma}")))?;
        }
        let file = resolve(base, &entry.path);
        let gzip = match entry.format {
            Some(ViewFormat::CsvGz) => true,
            Some(ViewFormat::Csv) => false,
            None => has_gz_extension(&file),
        };
        let (x, _) = read_csv(&file, gzip, entry.has_header, None)?;
        if let Some(first) = views.first().map(FeatureMatrix::n_samples) {
            if x.n_samples() != first {
                return Err(Error::Validation(format!(
                    "view 0 ({}) has {first} rows but view {l} ({}) has {}",
                    manifest.views[0].path.display(),
                    entry.path.display(),
                    x.n_samples()
                )));
            }
        }
        views.push(x);
        sigmas.push(entry.sigma);
    }

    let labels = match &manifest.labels {
        None => None,
        Some(entry) => {
            let labels = load_labels(resolve(base, &entry.path), entry.has_header, &entry.column)?;
            if labels.len() != views[0].n_samples() {
                return Err(Error::Validation(format!(
                    "labels ({}) have {} rows but views have {}",
                    entry.path.display(),
                    labels.len(),
                    views[0].n_samples()
                )));
            }
            Some(labels)
        }
    };

    Ok(MultiViewDataset {
        name: manifest.name,
        views,
        sigmas,
        labels,
    })
}

/// Solver settings captured in a run record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    pub rff_dim: usize,
    pub sigma: Vec<f64>,
    pub s0: f64,
    pub gamma: f64,
    pub cadence: usize,
    pub s_floor: f64,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub possibilistic: Option<bool>,
}

impl RunConfig {
    pub fn from_kpkm(config: &KpkmConfig) -> Self {
        let sched = config.schedule;
        RunConfig {
            k: config.k,
            rff_dim: config.rff_dim_or_default(),
            sigma: vec![config.kernel.bandwidth],
            s0: sched.s0,
            gamma: sched.gamma,
            cadence: sched.cadence,
            s_floor: sched.s_floor,
            tol: config.tol,
            max_iter: config.max_iter,
            m: None,
            lambda: None,
            possibilistic: None,
        }
    }

    pub fn from_mkpkm(config: &MkpkmConfig, specs: &[KernelSpec]) -> Self {
        let sched = config.schedule;
        RunConfig {
            k: config.k,
            rff_dim: config.rff_dim_or_default(),
            sigma: specs.iter().map(|s| s.bandwidth).collect(),
            s0: sched.s0,
            gamma: sched.gamma,
            cadence: sched.cadence,
            s_floor: sched.s_floor,
            tol: config.tol,
            max_iter: config.max_iter,
            m: Some(config.m),
            lambda: Some(config.lambda),
            possibilistic: Some(config.possibilistic),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTracePoint {
    pub iteration: usize,
    pub s: f64,
    pub objective: f64,
    pub alpha: Vec<f64>,
}

/// Everything needed to reproduce and evaluate one solver run.
///
/// `timings` holds wall-clock seconds per phase and is the only field that
/// differs between two runs with identical inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub solver: String,
    pub dataset: String,
    pub config: RunConfig,
    pub seed: u64,
    pub iterations_run: usize,
    pub converged: bool,
    pub trace: Vec<RunTracePoint>,
    pub assignments: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Scores>,
    pub timings: BTreeMap<String, f64>,
}

impl RunRecord {
    pub fn from_kpkm(dataset: &str, config: &KpkmConfig, result: &KpkmResult, metrics: Option<Scores>) -> Self {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            solver: "rff-kpkm".into(),
            dataset: dataset.into(),
            config: RunConfig::from_kpkm(config),
            seed: config.seed,
            iterations_run: result.iterations_run,
            converged: result.converged,
            trace: result
                .trace
                .iter()
                .map(|p| RunTracePoint {
                    iteration: p.iteration,
                    s: p.s,
                    objective: p.objective,
                    alpha: vec![1.0],
                })
                .collect(),
            assignments: result.assignments.clone(),
            metrics,
            timings: BTreeMap::new(),
        }
    }

    pub fn from_mkpkm(
        dataset: &str,
        config: &MkpkmConfig,
        specs: &[KernelSpec],
        result: &MkpkmResult,
        metrics: Option<Scores>,
    ) -> Self {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            solver: "ip-rff-mkpkm".into(),
            dataset: dataset.into(),
            config: RunConfig::from_mkpkm(config, specs),
            seed: config.seed,
            iterations_run: result.iterations_run,
            converged: result.converged,
            trace: result
                .trace
                .iter()
                .map(|p| RunTracePoint {
                    iteration: p.iteration,
                    s: p.s,
                    objective: p.objective,
                    alpha: p.alpha.clone(),
                })
                .collect(),
            assignments: result.assignments.clone(),
            metrics,
            timings: BTreeMap::new(),
        }
    }

    pub fn final_alpha(&self) -> Option<&[f64]> {
        self.trace.last().map(|p| p.alpha.as_slice())
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.trace.iter().find(|p| !p.objective.is_finite() || !p.s.is_finite()) {
            return Err(Error::Validation(format!("non-finite trace entry at iteration {}", p.iteration)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: RunRecord = serde_json::from_str(text)?;
        record.validate()?;
        Ok(record)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub record: PathBuf,
    pub assignments: PathBuf,
    pub trace: PathBuf,
}

/// Exclusive per-directory writer lock, released on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        let path = dir.join(LOCK_FILE);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(DirLock { path })
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn trace_tsv(record: &RunRecord) -> String {
    let views = record.trace.first().map_or(1, |p| p.alpha.len());
    let mut out = String::from("iter\ts\tobjective");
    for l in 1..=views {
        out.push_str(&format!("\talpha_{l}"));
    }
    out.push('\n');
    for p in &record.trace {
        out.push_str(&format!("{}\t{}\t{}", p.iteration, p.s, p.objective));
        for a in &p.alpha {
            out.push_str(&format!("\t{a}"));
        }
        out.push('\n');
    }
    out
}

/// Writes the record, its assignments and its trace into `out_dir`.
pub fn write_run(record: &RunRecord, out_dir: impl AsRef<Path>) -> Result<RunPaths> {
    let dir = out_dir.as_ref();
    record.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let _lock = DirLock::acquire(dir)?;

    let paths = RunPaths {
        record: dir.join(RECORD_FILE),
        assignments: dir.join(ASSIGNMENTS_FILE),
        trace: dir.join(TRACE_FILE),
    };
    let json = record.to_json()?;
    write_file(&paths.record, |w| w.write_all(json.as_bytes()))?;
    write_file(&paths.assignments, |w| {
        writeln!(w, "row,cluster")?;
        for (i, c) in record.assignments.iter().enumerate() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    })?;
    let tsv = trace_tsv(record);
    write_file(&paths.trace, |w| w.write_all(tsv.as_bytes()))?;
    Ok(paths)
}

pub fn read_run(dir: impl AsRef<Path>) -> Result<RunRecord> {
    let path = dir.as_ref().join(RECORD_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    RunRecord::from_json(&text)
}

pub fn read_assignments(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse_error(path, 0, e.to_string()))?;
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<(usize, usize)>().enumerate() {
        let (row, cluster) = rec.map_err(|e| parse_error(path, i + 2, e.to_string()))?;
        if row != i {
            return Err(parse_error(path, i + 2, format!("row index {row} out of order")));
        }
        out.push(cluster);
    }
    Ok(out)
}
