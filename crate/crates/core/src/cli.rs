//! The `pirl` command line: dataset synthesis, training, prediction,
//! evaluation and report export over the library.
//!
//! Failures print one JSON line `{"error": kind, "code": n, "message": ...}`
//! to stderr and exit with 2 (usage), 3 (input/output) or 4 (numerical).
//! `PIRL_THREADS` overrides the worker count.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataset::Dataset;
use crate::dynamics::DynamicsModel;
use crate::error::Error;
use crate::eval::{cluster_report, evaluate_models, k_sweep, run_comparison, train_method, EvalConfig, EvalReport, KSweepReport, Method};
use crate::features::{DesiredVelocityFormula, FeatureConfig, FeatureSet, ReferencePath};
use crate::io::{self, ModelArchive};
use crate::predict::{predict_rollout, MpcConfig, OnlineConfig};
use crate::synth::{generate_dataset, generate_driving_corpus, DrivingCorpusConfig, SynthConfig, ThetaSamplerConfig};

pub const THREADS_ENV: &str = "PIRL_THREADS";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    fn kind(&self) -> &'static str {
        match self.code {
            EXIT_USAGE => "usage",
            EXIT_IO => "io",
            _ => "numerical",
        }
    }

    /// The single-line JSON form written to stderr.
    pub fn to_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "code": self.code, "message": self.message }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) => EXIT_USAGE,
            Error::Io(_) | Error::Schema { .. } | Error::Json(_) | Error::Csv(_) | Error::VersionMismatch { .. } => EXIT_IO,
            _ => EXIT_NUMERICAL,
        };
        CliError { code, message: e.to_string() }
    }
}

/// Anything that goes wrong while reading an input file is an IO failure.
fn reading<T>(what: &Path, r: crate::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError {
        code: EXIT_IO,
        message: format!("reading {}: {e}", what.display()),
    })
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pirl", version, about = "Learn cost-function priors from trajectory demonstrations and predict with them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
    /// Train a prior on the training split of a dataset.
    Train(TrainArgs),
    /// Predict the continuation of observed tracks with a trained model.
    Predict(PredictArgs),
    /// Compare methods or trained models on the test split.
    Eval(EvalArgs),
    /// Evaluate the nearest-neighbour prior over several neighbour counts.
    SweepK(SweepArgs),
    /// Per-component weights and member counts of a mixture model.
    ClusterReport(ClusterArgs),
    /// Flatten an eval or sweep report to CSV.
    ExportPlotData(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum CorpusKind {
    Lqr,
    Driving,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lqr")]
    kind: CorpusKind,
    /// Number of trajectories (2000 for lqr, 270 for driving).
    #[arg(long)]
    n: Option<usize>,
    /// Steps per trajectory (50 for lqr, 40 for driving).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum FeatureKind {
    Lqr,
    Driving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DesiredSpeed {
    Verbatim,
    InverseCurvature,
}

#[derive(Debug, Args, Serialize)]
struct FeatureArgs {
    /// Feature map; defaults to lqr, or to the model's own for evaluation.
    #[arg(long, value_enum)]
    features: Option<FeatureKind>,
    /// Reference path waypoint CSV (x, y), required for driving features.
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "verbatim")]
    desired_speed: DesiredSpeed,
}

#[derive(Debug, Args, Serialize)]
struct ConfigArgs {
    /// Rationality coefficient of the trajectory likelihood.
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
    /// Observation steps used to infer the cost.
    #[arg(long, default_value_t = 10)]
    t_prime: usize,
    /// Re-infer the cost every this many predicted steps.
    #[arg(long)]
    reinfer_every: Option<usize>,
    /// Fraction of a bare trajectory CSV used for training.
    #[arg(long, default_value_t = 0.9)]
    train_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum MethodKind {
    Tirl,
    Gmm,
    Knn,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    /// Dataset directory or bare trajectory CSV.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    method: MethodKind,
    /// Mixture components (gmm, default 2) or neighbours (knn, default 1).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    feature: FeatureArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output model archive.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Observed tracks (trajectory CSV).
    #[arg(long)]
    observed: PathBuf,
    /// Steps to predict after each observed track.
    #[arg(long, default_value_t = 30)]
    horizon: usize,
    /// Neighbours consulted by a nearest-neighbour model.
    #[arg(long)]
    k_query: Option<usize>,
    #[arg(long)]
    reinfer_every: Option<usize>,
    /// Output trajectory CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Trained model archives to evaluate; without any, `--methods` are trained.
    #[arg(long)]
    model: Vec<PathBuf>,
    /// Methods to train and compare: tirl, gmm:K, knn:K.
    #[arg(long, value_delimiter = ',', default_value = "tirl,gmm:2,knn:1")]
    methods: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    feature: FeatureArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output report JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,50")]
    ks: Vec<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    feature: FeatureArgs,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ClusterArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ExportArgs {
    /// An eval or sweep report JSON.
    #[arg(long)]
    report: PathBuf,
    /// Write per-k aggregates instead of per-trajectory rows (sweep reports).
    #[arg(long)]
    summary: bool,
    #[arg(long)]
    out: PathBuf,
}

fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_target(false)
        .try_init();
}

fn init_threads() -> CliResult {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("worker pool already initialized");
    }
    log::info!("workers: {n}");
    Ok(())
}

fn log_config(command: &str, args: &impl Serialize) {
    match serde_json::to_string(args) {
        Ok(json) => log::info!("{command} {json}"),
        Err(e) => log::warn!("could not serialize the {command} configuration: {e}"),
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let message = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let err = CliError::usage(message.trim_start_matches("error: "));
            eprintln!("{}", err.to_line());
            return EXIT_USAGE;
        }
    };
    init_logging();
    match init_threads().and_then(|_| run(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.code
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::SweepK(a) => sweep(a),
        Command::ClusterReport(a) => clusters(a),
        Command::ExportPlotData(a) => export(a),
    }
}

fn synth(a: SynthArgs) -> CliResult {
    log_config("synth", &a);
    let (data, generator) = match a.kind {
        CorpusKind::Lqr => {
            let defaults = SynthConfig::default();
            let cfg = SynthConfig {
                n_trajectories: a.n.unwrap_or(defaults.n_trajectories),
                horizon: a.steps.unwrap_or(defaults.horizon),
                train_fraction: a.train_fraction.unwrap_or(defaults.train_fraction),
                ..defaults
            };
            let sampler = ThetaSamplerConfig::two_kernel(a.seed);
            let data = generate_dataset(&sampler, &cfg)?;
            let generator = serde_json::json!({ "kind": "lqr", "sampler": sampler, "synth": cfg });
            (data, generator)
        }
        CorpusKind::Driving => {
            let defaults = DrivingCorpusConfig::default();
            let cfg = DrivingCorpusConfig {
                n_trajectories: a.n.unwrap_or(defaults.n_trajectories),
                steps: a.steps.unwrap_or(defaults.steps),
                train_fraction: a.train_fraction.unwrap_or(defaults.train_fraction),
                seed: a.seed,
                ..defaults
            };
            let corpus = generate_driving_corpus(&cfg)?;
            std::fs::create_dir_all(&a.out)
                .map_err(|e| CliError { code: EXIT_IO, message: format!("{}: {e}", a.out.display()) })?;
            io::save_waypoints(&a.out.join("path.csv"), &cfg.reference_path()?)?;
            let generator = serde_json::json!({ "kind": "driving", "corpus": cfg });
            (corpus.dataset, generator)
        }
    };
    io::save_dataset(&a.out, &data, Some(generator))?;
    println!(
        "wrote {} trajectories ({} train / {} test) to {}",
        data.len(),
        data.train_indices().len(),
        data.test_indices().len(),
        a.out.display()
    );
    Ok(())
}

fn feature_set(f: &FeatureArgs) -> CliResult<Option<FeatureSet>> {
    let Some(kind) = f.features else {
        if f.path.is_some() {
            return Err(CliError::usage("--path is only meaningful with --features driving"));
        }
        return Ok(None);
    };
    Ok(Some(match kind {
        FeatureKind::Lqr => FeatureSet::LqrQuadratic,
        FeatureKind::Driving => {
            let file = f.path.as_ref().ok_or_else(|| CliError::usage("--features driving needs --path"))?;
            let path = reading(file, io::load_waypoints(file))?;
            let formula = match f.desired_speed {
                DesiredSpeed::Verbatim => DesiredVelocityFormula::PaperVerbatim,
                DesiredSpeed::InverseCurvature => DesiredVelocityFormula::InverseCurvature,
            };
            FeatureSet::driving(path, FeatureConfig { desired_velocity_formula: formula, ..FeatureConfig::default() })
        }
    }))
}

fn path_of(fs: &FeatureSet) -> Option<&ReferencePath> {
    match fs {
        FeatureSet::DrivingLongitudinal { path, .. } => Some(path),
        FeatureSet::LqrQuadratic => None,
    }
}

fn load_data(file: &Path, path: Option<&ReferencePath>, train_fraction: f64, seed: Option<u64>) -> CliResult<Dataset> {
    if file.is_dir() {
        return reading(file, io::load_dataset(file, path));
    }
    let seed = seed.ok_or_else(|| CliError::usage("splitting a bare trajectory file needs --seed"))?;
    let tracks = reading(file, io::load_tracks(file))?;
    reading(file, io::dataset_from_tracks(&tracks, path, train_fraction, seed))
}

fn dynamics_for(data: &Dataset) -> CliResult<DynamicsModel> {
    let dt = data.demonstrations().first().map(|t| t.dt()).ok_or_else(|| CliError::usage("empty dataset"))?;
    Ok(DynamicsModel::point_mass(dt)?)
}

fn eval_config(c: &ConfigArgs, seed: u64) -> CliResult<EvalConfig> {
    if !(c.beta > 0.0 && c.beta.is_finite()) {
        return Err(CliError::usage("--beta must be positive"));
    }
    let base = EvalConfig::default();
    let cfg = EvalConfig {
        irl: crate::irl::IrlConfig { beta: c.beta, ..base.irl },
        online: OnlineConfig {
            t_prime: c.t_prime,
            reinfer_every: c.reinfer_every,
            ..base.online
        },
        seed,
        ..base
    };
    cfg.online.validate()?;
    Ok(cfg)
}

fn parse_method(raw: &str) -> CliResult<Method> {
    let (name, k) = match raw.split_once(':') {
        Some((n, k)) => (n, Some(k.parse::<usize>().map_err(|_| CliError::usage(format!("bad k in method {raw:?}")))?)),
        None => (raw, None),
    };
    let method = match (name.trim(), k) {
        ("tirl", None) => Method::Tirl,
        ("gmm", k) => Method::PirlGmm { k: k.unwrap_or(2) },
        ("knn", k) => Method::PirlKnn { k: k.unwrap_or(1) },
        _ => return Err(CliError::usage(format!("unknown method {raw:?} (expected tirl, gmm:K or knn:K)"))),
    };
    if let Method::PirlGmm { k: 0 } | Method::PirlKnn { k: 0 } = method {
        return Err(CliError::usage("k must be at least 1"));
    }
    Ok(method)
}

fn train(a: TrainArgs) -> CliResult {
    let k = a.k.unwrap_or(if a.method == MethodKind::Gmm { 2 } else { 1 });
    if k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let method = match a.method {
        MethodKind::Tirl => Method::Tirl,
        MethodKind::Gmm => Method::PirlGmm { k },
        MethodKind::Knn => Method::PirlKnn { k },
    };
    let fs = feature_set(&a.feature)?.unwrap_or(FeatureSet::LqrQuadratic);
    let cfg = eval_config(&a.config, a.seed)?;
    let snapshot = serde_json::json!({ "args": &a, "eval": cfg, "method": method });
    log_config("train", &snapshot);
    let data = load_data(&a.data, path_of(&fs), a.config.train_fraction, Some(a.seed))?;
    if let Method::PirlKnn { k } = method {
        if k > data.train_indices().len() {
            return Err(CliError::usage(format!(
                "--k {k} exceeds the {} training demonstrations",
                data.train_indices().len()
            )));
        }
    }
    let dynamics = dynamics_for(&data)?;
    let model = train_method(method, &data.train_demos(), &fs, &dynamics, &cfg)?;
    io::save_model(&a.out, &ModelArchive::new(model, a.seed, &snapshot)?)?;
    println!("trained {method} on {} demonstrations -> {}", data.train_indices().len(), a.out.display());
    Ok(())
}

/// Evaluation settings and neighbour count recorded by `train`.
fn archived_settings(archive: &ModelArchive) -> (EvalConfig, Option<Method>) {
    let cfg = archive
        .config
        .get("eval")
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .unwrap_or_default();
    let method = archive.config.get("method").and_then(|v| serde_json::from_value(v.clone()).ok());
    (cfg, method)
}

fn load_archive(file: &Path) -> CliResult<ModelArchive> {
    reading(file, io::load_model(file))
}

fn predict(a: PredictArgs) -> CliResult {
    log_config("predict", &a);
    let archive = load_archive(&a.model)?;
    let (cfg, method) = archived_settings(&archive);
    let k_query = a.k_query.or(match method {
        Some(Method::PirlKnn { k }) => Some(k),
        _ => None,
    });
    let online = OnlineConfig {
        k_query: k_query.unwrap_or(cfg.online.k_query),
        reinfer_every: a.reinfer_every.or(cfg.online.reinfer_every),
        ..cfg.online
    };
    if online.k_query == 0 || a.horizon == 0 {
        return Err(CliError::usage("--k-query and --horizon must be positive"));
    }
    let fs = &archive.model.feature_set;
    let tracks = reading(&a.observed, io::load_tracks(&a.observed))?;
    let mut ids = Vec::with_capacity(tracks.len());
    let mut starts = Vec::with_capacity(tracks.len());
    let mut predictions = Vec::with_capacity(tracks.len());
    for t in &tracks {
        let observed = reading(&a.observed, t.to_trajectory(path_of(fs)))?;
        let dynamics = DynamicsModel::point_mass(observed.dt())?;
        let mpc = MpcConfig {
            horizon: a.horizon,
            max_iters: cfg.mpc_max_iters,
            grad_tol: cfg.mpc_grad_tol,
            fd_step: cfg.mpc_fd_step,
            ..MpcConfig::default()
        };
        let pred = predict_rollout(&archive.model, &observed, &online, &mpc, fs, &dynamics)
            .map_err(|e| CliError { message: format!("track {}: {e}", t.id), ..CliError::from(e) })?;
        let last = t.len() - 1;
        ids.push(t.id.clone());
        starts.push((t.frames[last] + 1, t.timestamps_ms[last] + (observed.dt() * 1000.0).round() as i64));
        predictions.push(pred);
    }
    io::write_file(&a.out, |w| io::write_trajectories_from(w, &ids, &predictions, &starts))?;
    println!("predicted {} tracks x {} steps -> {}", predictions.len(), a.horizon, a.out.display());
    Ok(())
}

fn print_report(report: &EvalReport) {
    for m in &report.per_method {
        println!("{:<18} MED {:.4e} ± {:.4e}  ({} failures)", m.label, m.med_mean, m.med_std, m.failures.len());
    }
}

fn eval(a: EvalArgs) -> CliResult {
    log_config("eval", &a);
    let flag_fs = feature_set(&a.feature)?;
    let report = if a.model.is_empty() {
        let seed = a.seed.ok_or_else(|| CliError::usage("training methods for evaluation needs --seed"))?;
        let methods = a.methods.iter().map(|m| parse_method(m)).collect::<CliResult<Vec<_>>>()?;
        let fs = flag_fs.unwrap_or(FeatureSet::LqrQuadratic);
        let cfg = eval_config(&a.config, seed)?;
        log_config("eval resolved", &cfg);
        let data = load_data(&a.data, path_of(&fs), a.config.train_fraction, Some(seed))?;
        run_comparison(&data, &methods, &fs, &dynamics_for(&data)?, &cfg)?
    } else {
        let archives = a.model.iter().map(|m| load_archive(m)).collect::<CliResult<Vec<_>>>()?;
        let (archived, _) = archived_settings(&archives[0]);
        let fs = flag_fs.unwrap_or_else(|| archives[0].model.feature_set.clone());
        let mut cfg = eval_config(&a.config, a.seed.unwrap_or(archives[0].seed))?;
        cfg.irl = archived.irl;
        log_config("eval resolved", &cfg);
        let data = load_data(&a.data, path_of(&fs), a.config.train_fraction, a.seed.or(Some(archives[0].seed)))?;
        let models: Vec<(Method, &crate::priors::StyleModel)> = archives
            .iter()
            .map(|ar| {
                let method = archived_settings(ar).1.unwrap_or_else(|| Method::of(&ar.model, 1));
                (method, &ar.model)
            })
            .collect();
        evaluate_models(&models, &data, &fs, &dynamics_for(&data)?, &cfg)?
    };
    io::save_eval_report(&a.out, &report)?;
    print_report(&report);
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult {
    log_config("sweep-k", &a);
    let seed = a.seed.unwrap_or(0);
    let fs = feature_set(&a.feature)?.unwrap_or(FeatureSet::LqrQuadratic);
    let cfg = eval_config(&a.config, seed)?;
    log_config("sweep-k resolved", &cfg);
    if a.ks.contains(&0) {
        return Err(CliError::usage("every k must be at least 1"));
    }
    let data = load_data(&a.data, path_of(&fs), a.config.train_fraction, Some(seed))?;
    let report: KSweepReport = k_sweep(&data, &a.ks, &fs, &dynamics_for(&data)?, &cfg)?;
    io::save_sweep_report(&a.out, &report)?;
    for i in 0..report.ks.len() {
        println!("k = {:>3}  MED {:.4e} ± {:.4e}", report.ks[i], report.med_mean[i], report.med_std[i]);
    }
    println!("spearman {:.3}", report.spearman());
    Ok(())
}

fn clusters(a: ClusterArgs) -> CliResult {
    log_config("cluster-report", &a);
    let archive = load_archive(&a.model)?;
    let data = load_data(&a.data, path_of(&archive.model.feature_set), 0.9, Some(archive.seed))?;
    let report = cluster_report(&archive.model, &data)?;
    io::write_json(&a.out, &report)?;
    for c in &report.clusters {
        println!(
            "component {}  weight {:.3}  theta {:?}  train {}  assigned {}",
            c.component,
            c.weight,
            c.theta.as_slice(),
            c.train_members,
            c.members
        );
    }
    Ok(())
}

fn export(a: ExportArgs) -> CliResult {
    log_config("export-plot-data", &a);
    let raw: serde_json::Value = reading(&a.report, io::read_json(&a.report))?;
    if raw.get("per_method").is_some() {
        if a.summary {
            return Err(CliError::usage("--summary applies to sweep reports"));
        }
        let report: EvalReport = reading(&a.report, serde_json::from_value(raw).map_err(Error::from))?;
        io::write_file(&a.out, |w| io::write_eval_csv(w, &report))?;
    } else if raw.get("ks").is_some() {
        let report: KSweepReport = reading(&a.report, serde_json::from_value(raw).map_err(Error::from))?;
        if a.summary {
            io::write_file(&a.out, |w| io::write_sweep_summary_csv(w, &report))?;
        } else {
            io::write_file(&a.out, |w| io::write_sweep_csv(w, &report))?;
        }
    } else {
        return Err(CliError {
            code: EXIT_IO,
            message: format!("{} is neither an eval nor a sweep report", a.report.display()),
        });
    }
    println!("wrote {}", a.out.display());
    Ok(())
}
