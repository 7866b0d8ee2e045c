//! Command-line front end: clustering runs over many seeds, the feature
//! dimension sweep and the kernel approximation probe.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};
use crate::features::{gaussian_kernel, recommended_dim, sample_rff, KernelSpec, DEFAULT_BANDWIDTH};
use crate::io::{load_csv, load_manifest, write_run, LabelColumn, RunRecord};
use crate::kpkm::{fit_kpkm, KpkmConfig, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::metrics::{accuracy, score, Scores};
use crate::mkpkm::{fit_mkpkm, MkpkmConfig, DEFAULT_FUZZINESS, DEFAULT_LAMBDA, LAMBDA_GRID};
use crate::powermeans::{
    PowerSchedule, DEFAULT_GAMMA, DEFAULT_S0, DEFAULT_S_FLOOR, MULTI_VIEW_CADENCE, SINGLE_VIEW_CADENCE,
};

pub const OUT_DIR_ENV: &str = "RFFKM_OUT_DIR";
pub const DEFAULT_SEED_COUNT: usize = 20;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rffkm", version, about = "Scalable kernel power k-means with random Fourier features")]
pub struct Cli {
    /// Maximum number of seeds run concurrently.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single-view RFF kernel power k-means over a CSV dataset.
    ClusterSingle(ClusterSingleArgs),
    /// Possibilistic multi-view clustering over a dataset manifest.
    ClusterMulti(ClusterMultiArgs),
    /// Mean accuracy as a function of the number of random features.
    DimSweep(DimSweepArgs),
    /// Kernel approximation error of random Fourier features.
    RffProbe(RffProbeArgs),
}

/// Solver settings shared by all clustering commands.
#[derive(Debug, Clone, Args)]
pub struct CliConfig {
    /// Number of clusters.
    #[arg(short, long)]
    pub k: usize,

    /// Number of random frequencies D (features have width 2D); defaults to ceil(4 ln(2k)^3).
    #[arg(long)]
    pub rff_dim: Option<usize>,

    /// Gaussian kernel bandwidth.
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    pub sigma: f64,

    /// Magnitude of the initial power exponent; the solver starts at s = -|s0|.
    #[arg(long, default_value_t = -DEFAULT_S0, allow_negative_numbers = true)]
    pub s0: f64,

    /// Annealing multiplier applied to s every `cadence` iterations.
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,

    /// Iterations between annealing steps [default: 3 single-view, 2 multi-view].
    #[arg(long)]
    pub cadence: Option<usize>,

    /// Most negative exponent reached by annealing.
    #[arg(long, default_value_t = DEFAULT_S_FLOOR, allow_negative_numbers = true)]
    pub s_floor: f64,

    /// Fuzziness exponent of the possibilistic memberships (multi-view only).
    #[arg(long, default_value_t = DEFAULT_FUZZINESS)]
    pub m: f64,

    /// Entropy regularization of the view weights (multi-view only).
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,

    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,

    /// Number of seeds, taken consecutively from `--seed`.
    #[arg(long, default_value_t = DEFAULT_SEED_COUNT)]
    pub seeds: usize,

    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, env = OUT_DIR_ENV, default_value = "rffkm-out")]
    pub out_dir: PathBuf,
}

impl CliConfig {
    pub fn new(k: usize, out_dir: impl Into<PathBuf>) -> Self {
        CliConfig {
            k,
            rff_dim: None,
            sigma: DEFAULT_BANDWIDTH,
            s0: -DEFAULT_S0,
            gamma: DEFAULT_GAMMA,
            cadence: None,
            s_floor: DEFAULT_S_FLOOR,
            m: DEFAULT_FUZZINESS,
            lambda: DEFAULT_LAMBDA,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seeds: DEFAULT_SEED_COUNT,
            seed: 0,
            out_dir: out_dir.into(),
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed + i).collect()
    }

    pub fn rff_dim_or_default(&self) -> usize {
        self.rff_dim.unwrap_or_else(|| recommended_dim(self.k))
    }

    fn schedule(&self, default_cadence: usize) -> Result<PowerSchedule> {
        PowerSchedule::new(-self.s0.abs(), self.gamma, self.cadence.unwrap_or(default_cadence), self.s_floor)
    }

    pub fn kpkm_config(&self, seed: u64) -> Result<KpkmConfig> {
        Ok(KpkmConfig::new(self.k)
            .with_kernel(KernelSpec::new(self.sigma)?)
            .with_rff_dim(self.rff_dim_or_default())
            .with_schedule(self.schedule(SINGLE_VIEW_CADENCE)?)
            .with_tol(self.tol)
            .with_max_iter(self.max_iter)
            .with_seed(seed))
    }

    pub fn mkpkm_config(&self, seed: u64, lambda: f64) -> Result<MkpkmConfig> {
        let mut config = MkpkmConfig::new(self.k)
            .with_rff_dim(self.rff_dim_or_default())
            .with_schedule(self.schedule(MULTI_VIEW_CADENCE)?)
            .with_lambda(lambda)
            .with_max_iter(self.max_iter)
            .with_seed(seed);
        config.m = self.m;
        config.tol = self.tol;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Feature CSV (optionally .gz).
    #[arg(long)]
    pub data: PathBuf,

    /// The first line of the CSV is a header.
    #[arg(long)]
    pub has_header: bool,

    /// Column holding ground-truth labels, by index or header name.
    #[arg(long)]
    pub label_column: Option<String>,
}

impl DataArgs {
    fn label_column(&self) -> Option<LabelColumn> {
        self.label_column.as_ref().map(|c| match c.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(c.clone()),
        })
    }

    pub fn load(&self) -> Result<(FeatureMatrix, Option<LabelVector>)> {
        load_csv(&self.data, self.has_header, self.label_column().as_ref())
    }
}

#[derive(Debug, Clone, Args)]
pub struct ClusterSingleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: CliConfig,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterMultiArgs {
    /// JSON manifest listing one CSV per view.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Run every lambda in {0.1, 1, 10, 100, 1000} instead of `--lambda`.
    #[arg(long)]
    pub lambda_sweep: bool,

    /// Pin all possibilistic memberships to 1.
    #[arg(long)]
    pub no_possibilistic: bool,

    /// Re-estimate the possibilistic regularizers after every sweep.
    #[arg(long)]
    pub refresh_eta: bool,

    #[command(flatten)]
    pub config: CliConfig,
}

#[derive(Debug, Clone, Args)]
pub struct DimSweepArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Values of D to evaluate [default: 5, 10, ..., 100].
    #[arg(long, value_delimiter = ',')]
    pub dims: Vec<usize>,

    #[command(flatten)]
    pub config: CliConfig,
}

#[derive(Debug, Clone, Args)]
pub struct RffProbeArgs {
    /// Input dimension of the sampled points.
    #[arg(long, default_value_t = 5)]
    pub d: usize,

    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    #[arg(long, value_delimiter = ',', default_values_t = [64, 256, 1024, 4096])]
    pub dims: Vec<usize>,

    /// Number of point pairs drawn from the unit ball.
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, env = OUT_DIR_ENV, default_value = "rffkm-out")]
    pub out_dir: PathBuf,
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Config(Error),
    Solver(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Solver(e) => write!(f, "solver failed: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err(e: Error) -> CliError {
    CliError::Config(e)
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Config(Error::invalid(e.to_string())))?;
            Ok(pool.install(f))
        }
    }
}

fn scores_for(pred: &[usize], labels: Option<&LabelVector>) -> Result<Option<Scores>> {
    labels.map(|y| score(pred, y.as_slice())).transpose()
}

fn dataset_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = mean(values.iter().copied());
    let var = mean(values.iter().map(|v| (v - m) * (v - m)));
    (m, var.sqrt())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| config_err(Error::io(parent, e)))?;
    }
    fs::write(path, text).map_err(|e| config_err(Error::io(path, e)))
}

fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed_{seed}"))
}

/// Mean metrics and view weights over the records of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub lambda: Option<f64>,
    pub seeds: usize,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub purity: Option<f64>,
    pub alpha: Vec<f64>,
}

impl SummaryRow {
    pub fn from_records(lambda: Option<f64>, records: &[RunRecord]) -> Self {
        let metric = |f: fn(&Scores) -> f64| -> Option<f64> {
            let values: Option<Vec<f64>> = records.iter().map(|r| r.metrics.as_ref().map(f)).collect();
            values.map(|v| mean(v))
        };
        let views = records.first().and_then(|r| r.final_alpha()).map_or(0, <[f64]>::len);
        let alpha = (0..views)
            .map(|l| mean(records.iter().filter_map(|r| r.final_alpha().map(|a| a[l]))))
            .collect();
        SummaryRow {
            lambda,
            seeds: records.len(),
            acc: metric(|s| s.acc),
            nmi: metric(|s| s.nmi),
            purity: metric(|s| s.purity),
            alpha,
        }
    }
}

fn summary_tsv(rows: &[SummaryRow], with_alpha: bool) -> String {
    let views = rows.first().map_or(0, |r| r.alpha.len());
    let mut out = String::from("solver_setting\tseeds\tacc\tnmi\tpurity");
    if with_alpha {
        for l in 1..=views {
            let _ = write!(out, "\talpha_{l}");
        }
    }
    out.push('\n');
    for r in rows {
        let setting = r.lambda.map_or_else(|| "default".to_string(), |l| format!("lambda={l}"));
        let _ = write!(out, "{setting}\t{}\t{}\t{}\t{}", r.seeds, fmt_opt(r.acc), fmt_opt(r.nmi), fmt_opt(r.purity));
        if with_alpha {
            for a in &r.alpha {
                let _ = write!(out, "\t{a}");
            }
        }
        out.push('\n');
    }
    out
}

fn per_seed_tsv(groups: &[(Option<f64>, Vec<RunRecord>)], with_alpha: bool) -> String {
    let views = groups
        .first()
        .and_then(|(_, rs)| rs.first())
        .and_then(|r| r.final_alpha())
        .map_or(0, <[f64]>::len);
    let mut out = String::from("lambda\tseed\tacc\tnmi\tpurity\titerations\tconverged");
    if with_alpha {
        for l in 1..=views {
            let _ = write!(out, "\talpha_{l}");
        }
    }
    out.push('\n');
    for (lambda, records) in groups {
        for r in records {
            let m = r.metrics.as_ref();
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                lambda.map_or_else(|| "NA".to_string(), |l| l.to_string()),
                r.seed,
                fmt_opt(m.map(|s| s.acc)),
                fmt_opt(m.map(|s| s.nmi)),
                fmt_opt(m.map(|s| s.purity)),
                r.iterations_run,
                r.converged
            );
            if with_alpha {
                for a in r.final_alpha().unwrap_or(&[]) {
                    let _ = write!(out, "\t{a}");
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Outcome of a clustering command: one record per seed, grouped per lambda.
#[derive(Debug, Clone)]
pub struct ClusterReport {
    pub groups: Vec<(Option<f64>, Vec<RunRecord>)>,
    pub summary: Vec<SummaryRow>,
}

impl ClusterReport {
    pub fn records(&self) -> impl Iterator<Item = &RunRecord> {
        self.groups.iter().flat_map(|(_, rs)| rs.iter())
    }
}

fn run_single_seed(
    name: &str,
    x: &FeatureMatrix,
    labels: Option<&LabelVector>,
    config: &KpkmConfig,
) -> Result<RunRecord> {
    let start = Instant::now();
    let result = fit_kpkm(x, config)?;
    let fit_secs = start.elapsed().as_secs_f64();
    let metrics = scores_for(&result.assignments, labels)?;
    let mut record = RunRecord::from_kpkm(name, config, &result, metrics);
    record.timings.insert("fit".into(), fit_secs);
    Ok(record)
}

pub fn cmd_cluster_single(args: &ClusterSingleArgs, jobs: Option<usize>) -> CliResult<ClusterReport> {
    let cfg = &args.config;
    let (x, labels) = args.data.load().map_err(config_err)?;
    let name = dataset_name(&args.data.data);
    let configs: Vec<KpkmConfig> = cfg
        .seed_list()
        .into_iter()
        .map(|s| cfg.kpkm_config(s))
        .collect::<Result<_>>()
        .map_err(config_err)?;

    let records = with_pool(jobs, || {
        configs
            .par_iter()
            .map(|c| run_single_seed(&name, &x, labels.as_ref(), c))
            .collect::<Result<Vec<_>>>()
    })?
    .map_err(CliError::Solver)?;

    for r in &records {
        write_run(r, seed_dir(&cfg.out_dir, r.seed)).map_err(config_err)?;
    }
    let groups = vec![(None, records)];
    let summary = vec![SummaryRow::from_records(None, &groups[0].1)];
    write_text(&cfg.out_dir.join("summary.tsv"), &summary_tsv(&summary, false))?;
    write_text(&cfg.out_dir.join("per_seed.tsv"), &per_seed_tsv(&groups, false))?;
    Ok(ClusterReport { groups, summary })
}

pub fn cmd_cluster_multi(args: &ClusterMultiArgs, jobs: Option<usize>) -> CliResult<ClusterReport> {
    let cfg = &args.config;
    let dataset = load_manifest(&args.manifest).map_err(config_err)?;
    let specs = dataset.kernel_specs(cfg.sigma).map_err(config_err)?;
    let lambdas: Vec<Option<f64>> = if args.lambda_sweep {
        LAMBDA_GRID.iter().map(|&l| Some(l)).collect()
    } else {
        vec![None]
    };

    let mut groups = Vec::with_capacity(lambdas.len());
    for lambda in lambdas {
        let configs: Vec<MkpkmConfig> = cfg
            .seed_list()
            .into_iter()
            .map(|s| {
                let mut c = cfg.mkpkm_config(s, lambda.unwrap_or(cfg.lambda))?;
                c.possibilistic = !args.no_possibilistic;
                c.refresh_eta = args.refresh_eta;
                Ok(c)
            })
            .collect::<Result<_>>()
            .map_err(config_err)?;

        let records = with_pool(jobs, || {
            configs
                .par_iter()
                .map(|c| {
                    let start = Instant::now();
                    let result = fit_mkpkm(&dataset.views, &specs, c)?;
                    let fit_secs = start.elapsed().as_secs_f64();
                    let metrics = scores_for(&result.assignments, dataset.labels.as_ref())?;
                    let mut record = RunRecord::from_mkpkm(&dataset.name, c, &specs, &result, metrics);
                    record.timings.insert("fit".into(), fit_secs);
                    Ok(record)
                })
                .collect::<Result<Vec<_>>>()
        })?
        .map_err(CliError::Solver)?;

        let root = match lambda {
            Some(l) => cfg.out_dir.join(format!("lambda_{l}")),
            None => cfg.out_dir.clone(),
        };
        for r in &records {
            write_run(r, seed_dir(&root, r.seed)).map_err(config_err)?;
        }
        groups.push((lambda, records));
    }

    let summary: Vec<SummaryRow> = groups.iter().map(|(l, rs)| SummaryRow::from_records(*l, rs)).collect();
    write_text(&cfg.out_dir.join("summary.tsv"), &summary_tsv(&summary, true))?;
    write_text(&cfg.out_dir.join("per_seed.tsv"), &per_seed_tsv(&groups, true))?;
    Ok(ClusterReport { groups, summary })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimSweepRow {
    pub dim: usize,
    pub mean_acc: f64,
    pub std_acc: f64,
}

pub fn default_sweep_dims() -> Vec<usize> {
    (5..=100).step_by(5).collect()
}

/// Mean and standard deviation of accuracy over `seeds` for each `D` in `dims`.
pub fn dim_sweep(
    x: &FeatureMatrix,
    labels: &LabelVector,
    base: &KpkmConfig,
    dims: &[usize],
    seeds: &[u64],
) -> Result<Vec<DimSweepRow>> {
    dims.iter()
        .map(|&dim| {
            let accs = seeds
                .par_iter()
                .map(|&seed| {
                    let config = base.clone().with_rff_dim(dim).with_seed(seed);
                    let result = fit_kpkm(x, &config)?;
                    accuracy(&result.assignments, labels.as_slice())
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean_acc, std_acc) = mean_std(&accs);
            Ok(DimSweepRow { dim, mean_acc, std_acc })
        })
        .collect()
}

pub fn dim_sweep_tsv(rows: &[DimSweepRow]) -> String {
    let mut out = String::from("D\tmean_acc\tstd_acc\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}", r.dim, r.mean_acc, r.std_acc);
    }
    out
}

pub fn cmd_dim_sweep(args: &DimSweepArgs, jobs: Option<usize>) -> CliResult<Vec<DimSweepRow>> {
    let cfg = &args.config;
    let (x, labels) = args.data.load().map_err(config_err)?;
    let labels = labels.ok_or_else(|| {
        config_err(Error::invalid(format!("{}: dim-sweep needs --label-column", args.data.data.display())))
    })?;
    let dims = if args.dims.is_empty() {
        default_sweep_dims()
    } else {
        args.dims.clone()
    };
    let base = cfg.kpkm_config(cfg.seed).map_err(config_err)?;
    let seeds = cfg.seed_list();
    let rows = with_pool(jobs, || dim_sweep(&x, &labels, &base, &dims, &seeds))?.map_err(CliError::Solver)?;
    let tsv = dim_sweep_tsv(&rows);
    write_text(&cfg.out_dir.join("dim_sweep.tsv"), &tsv)?;
    print!("{tsv}");
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub dim: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub median_abs_error: f64,
}

/// Draws `count` points uniformly from the unit ball in `d` dimensions.
pub fn unit_ball_points(d: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let radius = Uniform::new(0.0f64, 1.0);
    (0..count)
        .map(|_| {
            let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let r = radius.sample(rng).powf(1.0 / d as f64);
            dir.into_iter().map(|v| v * r / norm).collect()
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Kernel approximation error of `<phi(x), phi(y)>` against `k(x, y)` for
/// `pairs` point pairs in the unit ball, one row per feature count.
pub fn rff_probe(d: usize, sigma: f64, dims: &[usize], pairs: usize, seed: u64) -> Result<Vec<ProbeRow>> {
    if d == 0 || pairs == 0 {
        return Err(Error::invalid("rff probe needs d >= 1 and at least one pair"));
    }
    let spec = KernelSpec::new(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = unit_ball_points(d, pairs, &mut rng);
    let ys = unit_ball_points(d, pairs, &mut rng);
    let exact: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| gaussian_kernel(x.as_slice().into(), y.as_slice().into(), &spec))
        .collect::<Result<_>>()?;

    dims.iter()
        .map(|&dim| {
            let map = sample_rff(d, dim, &spec, seed)?;
            let mut abs = Vec::with_capacity(pairs);
            let mut max_rel = 0.0f64;
            for ((x, y), k) in xs.iter().zip(&ys).zip(&exact) {
                let px = map.map_point(x.as_slice().into())?;
                let py = map.map_point(y.as_slice().into())?;
                let approx: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
                let err = (approx - k).abs();
                max_rel = max_rel.max(err / k);
                abs.push(err);
            }
            let max_abs = abs.iter().copied().fold(0.0, f64::max);
            Ok(ProbeRow {
                dim,
                max_abs_error: max_abs,
                max_rel_error: max_rel,
                median_abs_error: median(&mut abs),
            })
        })
        .collect()
}

pub fn rff_probe_tsv(rows: &[ProbeRow]) -> String {
    let mut out = String::from("D\tmax_abs_error\tmax_rel_error\tmedian_abs_error\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.dim, r.max_abs_error, r.max_rel_error, r.median_abs_error);
    }
    out
}

pub fn cmd_rff_probe(args: &RffProbeArgs) -> CliResult<Vec<ProbeRow>> {
    let rows = rff_probe(args.d, args.sigma, &args.dims, args.pairs, args.seed).map_err(config_err)?;
    let tsv = rff_probe_tsv(&rows);
    write_text(&args.out_dir.join("rff_probe.tsv"), &tsv)?;
    print!("{tsv}");
    Ok(rows)
}

fn print_summary(report: &ClusterReport, with_alpha: bool) {
    print!("{}", summary_tsv(&report.summary, with_alpha));
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match &cli.command {
        Command::ClusterSingle(a) => cmd_cluster_single(a, cli.jobs).map(|r| print_summary(&r, false)),
        Command::ClusterMulti(a) => cmd_cluster_multi(a, cli.jobs).map(|r| print_summary(&r, true)),
        Command::DimSweep(a) => cmd_dim_sweep(a, cli.jobs).map(drop),
        Command::RffProbe(a) => cmd_rff_probe(a).map(drop),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rffkm: {e}");
            e.exit_code()
        }
    }
}
