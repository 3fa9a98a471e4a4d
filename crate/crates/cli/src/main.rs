use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lptml::approx::{write_grid_csv, LptmlConfig};
use lptml::eval::{self, CvConfig, LabeledDataset, Learner, PairCounts};
use lptml::io::{load_constraints, write_pairs, ModelFile, Thresholds};
use lptml::metric::MetricMatrix;
use lptml::parallel::{derive_seed, resolve_workers};
use lptml::sdp::LinearFunctional;
use lptml::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser, Debug, Serialize)]
#[command(name = "lptml", version, about = "Metric learning by minimizing violated pairwise constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Learn a metric and write it as model JSON.
    Train(TrainArgs),
    /// Evaluate a model (or the identity) with k-NN.
    Eval(EvalArgs),
    /// End-to-end stratified cross-validation.
    Cv(CvArgs),
    /// Write the stretched two-Gaussian dataset.
    Synth(SynthArgs),
    /// Write the poisoned two-Gaussian dataset.
    Poison(SynthArgs),
    /// Project a dataset onto its top principal directions.
    Pca(PcaArgs),
    /// Violated fraction and accuracy against the iteration budget.
    Curves(CurvesArgs),
    /// Training time against dimension after PCA.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct SolverArgs {
    /// Inner iterations per grid row.
    #[arg(long, default_value_t = 2000)]
    t: usize,
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// Master seed; every random choice derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all cores). LPTML_WORKERS overrides.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Rank candidates by a sampled violation estimate.
    #[arg(long)]
    approx_count: bool,
    #[arg(long)]
    sample_size: Option<usize>,
    /// Run every grid row even after a zero-violation candidate.
    #[arg(long)]
    full_grid: bool,
    #[arg(long)]
    no_move_to_front: bool,
    #[arg(long)]
    no_pivoting: bool,
    #[arg(long, default_value_t = lptml::metric::DEFAULT_FEAS_TOL)]
    feas_tol: f64,
}

impl SolverArgs {
    fn config(&self) -> LptmlConfig {
        LptmlConfig {
            epsilon: self.epsilon,
            t: self.t,
            approx_count: self.approx_count,
            sample_size: self.sample_size,
            master_seed: self.seed,
            workers: self.workers,
            feas_tol: self.feas_tol,
            move_to_front: !self.no_move_to_front,
            pivoting: !self.no_pivoting,
            stop_at_zero: !self.full_grid,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct PairArgs {
    /// Similar pairs to sample (default: min(500, pool)).
    #[arg(long)]
    n_sim: Option<usize>,
    /// Dissimilar pairs to sample (default: min(500, pool)).
    #[arg(long)]
    n_dis: Option<usize>,
}

impl PairArgs {
    fn counts(&self) -> PairCounts {
        PairCounts {
            n_sim: self.n_sim,
            n_dis: self.n_dis,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
enum LearnerKind {
    Identity,
    Lptml,
    /// LPTML with a trace penalty weighted by --eta.
    LptmlTrace,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    /// Points CSV, or one of iris, wine, synthetic, poisoned.
    #[arg(long)]
    data: String,
    /// Constraint CSV (kind,index_p,index_q); sampled from labels if absent.
    #[arg(long, requires = "thresholds")]
    constraints: Option<PathBuf>,
    /// Threshold sidecar JSON for --constraints.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Also write the sampled constraints here (plus a .json sidecar).
    #[arg(long)]
    save_constraints: Option<PathBuf>,
    /// Trace penalty weight; 0 runs the plain scheme.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Grid record CSV (i,j,p,violations,status,seconds).
    #[arg(long)]
    grid_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    pairs: PairArgs,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    /// Model JSON, or "identity".
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: String,
    /// Reference points for k-NN; without it the metric is scored by
    /// stratified cross-validation on --data.
    #[arg(long)]
    train: Option<String>,
    /// Count violations of these constraints (needs --thresholds).
    #[arg(long, requires = "thresholds")]
    constraints: Option<PathBuf>,
    #[arg(long)]
    thresholds: Option<PathBuf>,
    #[arg(long, default_value_t = eval::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = lptml::metric::DEFAULT_FEAS_TOL)]
    feas_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct CvArgs {
    #[arg(long)]
    data: String,
    #[arg(long, value_enum, default_value_t = LearnerKind::Lptml)]
    learner: LearnerKind,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 2)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value_t = eval::DEFAULT_K)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    pairs: PairArgs,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the y stretch.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct PcaArgs {
    #[arg(long)]
    data: String,
    /// Target dimension.
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CurvesArgs {
    #[arg(long)]
    data: String,
    /// Comma-separated iteration counts (default 1,2,5,10,... up to --t).
    #[arg(long, value_delimiter = ',')]
    iterations: Vec<usize>,
    #[arg(long, default_value_t = eval::DEFAULT_K)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    pairs: PairArgs,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[arg(long, default_value = "wine")]
    data: String,
    /// Dimensions to sweep, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5, 6, 7, 8])]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    pairs: PairArgs,
}

/// Failures sorted by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Solver(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::InvalidConfig(_) => Failure::Usage(m),
            Error::Io(_)
            | Error::Parse(_)
            | Error::InvalidDataset(_)
            | Error::InvalidConstraint(_)
            | Error::DimensionMismatch { .. }
            | Error::NotEnoughPairs
            | Error::MalformedProblem(_) => Failure::Data(m),
            Error::RecursionGuardExceeded { .. }
            | Error::NotFound(_)
            | Error::EmptyCandidates
            | Error::NumericalFailure(_)
            | Error::NotPsd(_)
            | Error::AllSubproblemsFailed => Failure::Solver(m),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// A dataset and the bytes its checksum is taken over.
struct Loaded {
    ds: LabeledDataset,
    source: String,
    sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn csv_bytes(ds: &LabeledDataset) -> Vec<u8> {
    let mut buf = Vec::new();
    ds.write_csv(&mut buf).expect("writing to memory");
    buf
}

fn load_data(spec: &str, seed: u64) -> Outcome<Loaded> {
    let path = Path::new(spec);
    if path.exists() {
        let bytes = fs::read(path).map_err(|e| Failure::Data(format!("{spec}: {e}")))?;
        let ds = LabeledDataset::load_csv(path)?;
        return Ok(Loaded {
            ds,
            source: spec.into(),
            sha256: sha256_hex(&bytes),
        });
    }
    let ds = match spec {
        "iris" => eval::iris(),
        "wine" => eval::wine(),
        "synthetic" => eval::synth_two_gaussians(seed),
        "poisoned" => eval::poison_dataset(&eval::synth_two_gaussians_raw(seed), seed),
        _ => return Err(Failure::Data(format!("--data {spec}: no such file and not a built-in dataset"))),
    };
    let sha256 = sha256_hex(&csv_bytes(&ds));
    Ok(Loaded {
        ds,
        source: format!("builtin:{spec}"),
        sha256,
    })
}

fn create(path: &Path) -> Outcome<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("{}: {e}", dir.display())))?;
    }
    fs::File::create(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Outcome<()> {
    create(path)?
        .write_all(text.as_bytes())
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
struct DatasetDigest {
    role: &'static str,
    source: String,
    sha256: String,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    argv: Vec<String>,
    flags: &'a Command,
    datasets: Vec<DatasetDigest>,
    master_seed: u64,
    workers: usize,
    version: &'static str,
    wall_time: f64,
}

/// Everything a command run produced, for the manifest.
struct Run {
    datasets: Vec<DatasetDigest>,
    seed: u64,
    workers: usize,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn new(seed: u64, workers: usize) -> Self {
        Self {
            datasets: Vec::new(),
            seed,
            workers,
            outputs: Vec::new(),
        }
    }

    fn dataset(&mut self, role: &'static str, l: &Loaded) {
        self.datasets.push(DatasetDigest {
            role,
            source: l.source.clone(),
            sha256: l.sha256.clone(),
        });
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Train(_) => "train",
        Command::Eval(_) => "eval",
        Command::Cv(_) => "cv",
        Command::Synth(_) => "synth",
        Command::Poison(_) => "poison",
        Command::Pca(_) => "pca",
        Command::Curves(_) => "curves",
        Command::Bench(_) => "bench",
    }
}

fn train(a: &TrainArgs, run: &mut Run) -> Outcome<()> {
    let data = load_data(&a.data, a.solver.seed)?;
    run.dataset("data", &data);
    let ds = &data.ds;
    let cfg = a.solver.config();
    cfg.validate()?;
    let d = ds.dim();
    let (pairs, cs) = match (&a.constraints, &a.thresholds) {
        (Some(c), Some(t)) => {
            run.datasets.push(DatasetDigest {
                role: "constraints",
                source: c.display().to_string(),
                sha256: sha256_hex(&fs::read(c).map_err(|e| Failure::Data(format!("{}: {e}", c.display())))?),
            });
            load_constraints(ds, c, t)?
        }
        _ => {
            let (u, l) = eval::compute_thresholds(ds)?;
            let (sp, dp) = eval::pair_pools(ds);
            let counts = a.pairs.counts();
            let pairs = eval::generate_constraints(
                ds,
                counts.n_sim.unwrap_or(sp.len().min(500)),
                counts.n_dis.unwrap_or(dp.len().min(500)),
                derive_seed(a.solver.seed, 1, 0),
            )?;
            let cs = eval::build_constraint_set(ds, &pairs, u, l)?;
            (pairs, cs)
        }
    };
    if let Some(p) = &a.save_constraints {
        let mut buf = Vec::new();
        write_pairs(&pairs, &mut buf)?;
        write_text(p, std::str::from_utf8(&buf).expect("ascii"))?;
        let side = Thresholds { u: cs.u, l: cs.l, d };
        let sp = with_suffix(p, ".json");
        write_text(&sp, &serde_json::to_string(&side).expect("serializable"))?;
        run.outputs.push(p.clone());
        run.outputs.push(sp);
    }
    let cs = Arc::new(cs);
    let f = cs.all_indices();
    let res = if a.eta > 0.0 {
        lptml::approx::lptml_regularized(&f, Arc::clone(&cs), &cfg, a.eta, &LinearFunctional::trace(d))?
    } else {
        lptml::approx::lptml(&f, Arc::clone(&cs), &cfg)?
    };
    if let Some(g) = &a.grid_out {
        let mut buf = Vec::new();
        write_grid_csv(&res.grid, &mut buf)?;
        write_text(g, std::str::from_utf8(&buf).expect("ascii"))?;
        run.outputs.push(g.clone());
    }
    let model = ModelFile::from_metric(&res.best, cs.u, cs.l);
    write_text(&a.out, &model.to_json())?;
    run.outputs.push(a.out.clone());
    eprintln!(
        "violations {} of {} ({:.4}) in {:.2}s",
        res.violations,
        f.len(),
        res.fraction,
        res.wall_time
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    #[serde(flatten)]
    report: eval::EvalReport,
    violations: Option<usize>,
    constraints: Option<usize>,
}

fn load_model(spec: &str, d: usize, run: &mut Run) -> Outcome<MetricMatrix> {
    if spec == "identity" {
        return Ok(MetricMatrix::identity(d));
    }
    let path = Path::new(spec);
    let bytes = fs::read(path).map_err(|e| Failure::Data(format!("--model {spec}: {e}")))?;
    run.datasets.push(DatasetDigest {
        role: "model",
        source: spec.into(),
        sha256: sha256_hex(&bytes),
    });
    let m = ModelFile::load(path)?.metric()?;
    if m.dim() != d {
        return Err(Failure::Data(format!("--model {spec}: model has d = {} but the data has d = {d}", m.dim())));
    }
    Ok(m)
}

fn eval_cmd(a: &EvalArgs, run: &mut Run) -> Outcome<()> {
    let started = Instant::now();
    let data = load_data(&a.data, a.seed)?;
    run.dataset("data", &data);
    let ds = &data.ds;
    let metric = load_model(&a.model, ds.dim(), run)?;
    let (accs, folds) = match &a.train {
        Some(t) => {
            let tr = load_data(t, a.seed)?;
            run.dataset("train", &tr);
            (vec![eval::knn_accuracy(&tr.ds, ds, &metric.g, a.k)?], 1)
        }
        None => {
            let mut accs = Vec::new();
            for rep in 0..a.repeats.max(1) {
                let folds = eval::cv::stratified_folds(ds, a.folds, derive_seed(a.seed, rep as u64, 0))?;
                for (f, test) in folds.iter().enumerate() {
                    let train: Vec<usize> = folds
                        .iter()
                        .enumerate()
                        .filter(|&(g, _)| g != f)
                        .flat_map(|(_, v)| v.iter().copied())
                        .collect();
                    accs.push(eval::knn_accuracy(&ds.subset(&train), &ds.subset(test), &metric.g, a.k)?);
                }
            }
            (accs, a.folds)
        }
    };
    let (violations, constraints) = match (&a.constraints, &a.thresholds) {
        (Some(c), Some(t)) => {
            let (_, cs) = load_constraints(ds, c, t)?;
            let idx = cs.all_indices();
            (Some(cs.count_violations(&metric.a, &idx, a.feas_tol).0), Some(idx.len()))
        }
        _ => (None, None),
    };
    let (mean, std) = eval::cv::mean_std(&accs);
    let out = EvalOutput {
        report: eval::EvalReport {
            dataset: ds.name.clone(),
            learner: if a.model == "identity" { "identity".into() } else { "model".into() },
            accuracy_mean: mean,
            accuracy_std: std,
            fold_accuracies: accs,
            fold_violated_fractions: Vec::new(),
            fallbacks: 0,
            k: a.k,
            folds,
            repeats: if a.train.is_some() { 1 } else { a.repeats.max(1) },
            seed: a.seed,
            t: None,
            epsilon: None,
            wall_time: started.elapsed().as_secs_f64(),
        },
        violations,
        constraints,
    };
    emit_json(&out, a.out.as_deref(), run)
}

fn emit_json<T: Serialize>(v: &T, out: Option<&Path>, run: &mut Run) -> Outcome<()> {
    let text = serde_json::to_string_pretty(v).expect("serializable") + "\n";
    match out {
        Some(p) => {
            write_text(p, &text)?;
            run.outputs.push(p.to_path_buf());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cv_cmd(a: &CvArgs, run: &mut Run) -> Outcome<()> {
    let data = load_data(&a.data, a.solver.seed)?;
    run.dataset("data", &data);
    let cfg = a.solver.config();
    cfg.validate()?;
    let learner = match a.learner {
        LearnerKind::Identity => Learner::Identity,
        LearnerKind::Lptml => Learner::Lptml(cfg),
        LearnerKind::LptmlTrace => Learner::LptmlTrace { cfg, eta: a.eta },
    };
    let report = eval::cross_validate(
        &data.ds,
        &CvConfig {
            folds: a.folds,
            repeats: a.repeats,
            seed: a.solver.seed,
            k: a.k,
            counts: a.pairs.counts(),
            learner,
        },
    )?;
    eprintln!("accuracy {:.4} ± {:.4}", report.accuracy_mean, report.accuracy_std);
    emit_json(&report, a.out.as_deref(), run)
}

fn write_dataset(ds: &LabeledDataset, path: &Path, run: &mut Run) -> Outcome<()> {
    let bytes = csv_bytes(ds);
    create(path)?
        .write_all(&bytes)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    run.outputs.push(path.to_path_buf());
    Ok(())
}

fn synth_cmd(a: &SynthArgs, poison: bool, run: &mut Run) -> Outcome<()> {
    let raw = eval::synth_two_gaussians_raw(a.seed);
    let ds = match (poison, a.raw) {
        (false, false) => raw.stretch(1, eval::dataset::SYNTH_STRETCH),
        (false, true) => raw,
        (true, false) => eval::poison_dataset(&raw, a.seed),
        (true, true) => eval::poison_dataset(&raw, a.seed).stretch(1, 1.0 / eval::dataset::SYNTH_STRETCH),
    };
    write_dataset(&ds, &a.out, run)
}

fn pca_cmd(a: &PcaArgs, run: &mut Run) -> Outcome<()> {
    let data = load_data(&a.data, 0)?;
    run.dataset("data", &data);
    let red = eval::pca_reduce(&data.ds, a.dim)?;
    write_dataset(&red, &a.out, run)
}

fn default_iterations(t: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut base = 1;
    while base <= t {
        for m in [1, 2, 5] {
            if base * m <= t {
                v.push(base * m);
            }
        }
        base *= 10;
    }
    if v.last() != Some(&t) {
        v.push(t);
    }
    v
}

fn curves_cmd(a: &CurvesArgs, run: &mut Run) -> Outcome<()> {
    let data = load_data(&a.data, a.solver.seed)?;
    run.dataset("data", &data);
    let cfg = a.solver.config();
    cfg.validate()?;
    let its = if a.iterations.is_empty() { default_iterations(a.solver.t) } else { a.iterations.clone() };
    let pts = eval::learning_curve(&data.ds, &cfg, &its, a.pairs.counts(), a.k, a.solver.seed)?;
    let mut buf = Vec::new();
    eval::write_curve_csv(&pts, &mut buf)?;
    write_text(&a.out, std::str::from_utf8(&buf).expect("ascii"))?;
    run.outputs.push(a.out.clone());
    Ok(())
}

fn bench_cmd(a: &BenchArgs, run: &mut Run) -> Outcome<()> {
    let data = load_data(&a.data, a.solver.seed)?;
    run.dataset("data", &data);
    let cfg = a.solver.config();
    cfg.validate()?;
    let rows = eval::bench_dimensions(&data.ds, &a.dims, a.runs, &cfg, a.pairs.counts(), a.solver.seed)?;
    for r in &rows {
        eprintln!("d = {}: median {:.3}s", r.d, r.median);
    }
    let mut buf = Vec::new();
    eval::write_bench_csv(&rows, &mut buf)?;
    write_text(&a.out, std::str::from_utf8(&buf).expect("ascii"))?;
    run.outputs.push(a.out.clone());
    Ok(())
}

fn execute(cli: &Cli, argv: Vec<String>) -> Outcome<()> {
    let started = Instant::now();
    let (seed, workers) = match &cli.command {
        Command::Train(a) => (a.solver.seed, a.solver.workers),
        Command::Cv(a) => (a.solver.seed, a.solver.workers),
        Command::Curves(a) => (a.solver.seed, a.solver.workers),
        Command::Bench(a) => (a.solver.seed, a.solver.workers),
        Command::Eval(a) => (a.seed, 1),
        Command::Synth(a) | Command::Poison(a) => (a.seed, 1),
        Command::Pca(_) => (0, 1),
    };
    let mut run = Run::new(seed, resolve_workers(workers));
    match &cli.command {
        Command::Train(a) => train(a, &mut run)?,
        Command::Eval(a) => eval_cmd(a, &mut run)?,
        Command::Cv(a) => cv_cmd(a, &mut run)?,
        Command::Synth(a) => synth_cmd(a, false, &mut run)?,
        Command::Poison(a) => synth_cmd(a, true, &mut run)?,
        Command::Pca(a) => pca_cmd(a, &mut run)?,
        Command::Curves(a) => curves_cmd(a, &mut run)?,
        Command::Bench(a) => bench_cmd(a, &mut run)?,
    }
    let manifest = RunManifest {
        command: command_name(&cli.command),
        argv,
        flags: &cli.command,
        datasets: run.datasets,
        master_seed: run.seed,
        workers: run.workers,
        version: env!("CARGO_PKG_VERSION"),
        wall_time: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
    for out in &run.outputs {
        write_text(&with_suffix(out, ".manifest.json"), &text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match execute(&cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
