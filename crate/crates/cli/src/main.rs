//! Command-line front end. Each subcommand resolves a merged configuration
//! (JSON file plus flag overrides), runs one pipeline from the core crate,
//! and writes a CSV table plus a JSON metadata sidecar.

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use ndk_core::*;
use serde::Deserialize;
use serde_json::json;

mod table;

#[derive(Parser)]
#[command(name = "ndk", version, about = "Mean predictor dynamics of wide networks under Langevin learning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the two-time dynamical kernel over a time grid
    Kernel(Common),
    /// Solve the mean-predictor time course with reference columns
    Trajectory(Common),
    /// Compare a finite-width Langevin ensemble against the theory
    Langevin(Common),
    /// Equilibrium drift histograms and readout accuracy over lag
    Drift(Common),
    /// NTK versus NNGP equilibrium test MSE across depths
    Equilibria(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config file; explicit flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset kind: synthetic, mnist, or cifar
    #[arg(long)]
    dataset: Option<String>,
    /// Class pair for image datasets, e.g. 0,1
    #[arg(long)]
    classes: Option<String>,
    /// Examples kept per class
    #[arg(long = "per-class")]
    per_class: Option<usize>,
    /// Examples moved from the end of the slice into the test set
    #[arg(long)]
    holdout: Option<usize>,
    /// IDX image file (mnist dataset)
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file (mnist dataset)
    #[arg(long)]
    labels: Option<PathBuf>,
    /// CIFAR binary batch file
    #[arg(long = "data-file")]
    data_file: Option<PathBuf>,
    /// Input normalization: per-vector or global
    #[arg(long)]
    normalize: Option<String>,
    /// Synthetic train set size (even)
    #[arg(long)]
    p: Option<usize>,
    /// Synthetic test overlap with its paired train input
    #[arg(long = "o-test")]
    o_test: Option<f64>,
    /// Activation: linear, relu, or erf
    #[arg(long)]
    act: Option<String>,
    /// Number of hidden layers
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Weight prior variance at equilibrium
    #[arg(long)]
    sigma2: Option<f64>,
    /// Weight variance at initialization
    #[arg(long = "sigma0-2")]
    sigma0_2: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    /// Langevin replica count
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long = "base-seed")]
    base_seed: Option<u64>,
    /// Langevin learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Hidden width for the simulator
    #[arg(long)]
    width: Option<usize>,
    /// Input dimension for the synthetic simulator problem
    #[arg(long)]
    n0: Option<usize>,
    /// Histogram bin width for the drift command
    #[arg(long = "bin-width")]
    bin_width: Option<f64>,
    /// Output CSV path; sidecar metadata goes to the same path with .json
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
}

/// JSON config mirror of the flag set; any field may be omitted.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dataset: Option<String>,
    classes: Option<String>,
    per_class: Option<usize>,
    holdout: Option<usize>,
    images: Option<PathBuf>,
    labels: Option<PathBuf>,
    data_file: Option<PathBuf>,
    normalize: Option<String>,
    p: Option<usize>,
    o_test: Option<f64>,
    act: Option<String>,
    depth: Option<u32>,
    temperature: Option<f64>,
    sigma2: Option<f64>,
    sigma0_2: Option<f64>,
    dt: Option<f64>,
    t_max: Option<f64>,
    seeds: Option<usize>,
    base_seed: Option<u64>,
    lr: Option<f64>,
    width: Option<usize>,
    n0: Option<usize>,
    bin_width: Option<f64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Core(CoreError),
    Io(String, std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{path}: {e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(..) => 3,
            CliError::Core(e) => match e {
                CoreError::Format { .. } | CoreError::Io { .. } => 3,
                CoreError::Divergence { .. }
                | CoreError::NonFinite { .. }
                | CoreError::SingularKernel { .. } => 4,
                _ => 2,
            },
        }
    }
}

/// Fully resolved run settings: flags win over config file entries, config
/// entries win over defaults.
#[derive(Clone)]
struct Run {
    dataset: String,
    classes: (u8, u8),
    per_class: usize,
    holdout: usize,
    images: Option<PathBuf>,
    labels: Option<PathBuf>,
    data_file: Option<PathBuf>,
    normalize: Normalize,
    p: usize,
    o_test: f64,
    act: Activation,
    depth: u32,
    params: DynamicsParams,
    seeds: usize,
    base_seed: u64,
    lr: f64,
    width: usize,
    n0: usize,
    bin_width: f64,
    out: PathBuf,
}

fn data_dir() -> PathBuf {
    std::env::var_os("NDK_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn resolve(args: &Common, default_out: &str, default_t_max: Option<f64>) -> Result2<Run> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(path.display().to_string(), e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => FileConfig::default(),
    };
    macro_rules! pick {
        ($field:ident, $default:expr) => {
            args.$field.clone().or(file.$field.clone()).unwrap_or($default)
        };
    }
    let temperature = pick!(temperature, 1e-3);
    let t_max = pick!(t_max, default_t_max.unwrap_or(10.0 / temperature));
    let act: Activation = pick!(act, "relu".to_string())
        .parse()
        .map_err(|e: CoreError| CliError::Config(e.to_string()))?;
    let normalize = match pick!(normalize, "per-vector".to_string()).as_str() {
        "per-vector" => Normalize::PerVector,
        "global" => Normalize::Global,
        other => return Err(CliError::Config(format!("unknown normalization '{other}'"))),
    };
    let classes_str = pick!(classes, "0,1".to_string());
    let classes = match classes_str.split_once(',') {
        Some((a, b)) => (
            a.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad class '{a}'")))?,
            b.trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad class '{b}'")))?,
        ),
        None => return Err(CliError::Config(format!("--classes expects 'a,b', got '{classes_str}'"))),
    };
    let params = DynamicsParams::new(
        temperature,
        pick!(sigma2, 1.0),
        pick!(sigma0_2, 1.0),
        pick!(dt, 0.01),
        t_max,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let run = Run {
        dataset: pick!(dataset, "synthetic".to_string()),
        classes,
        per_class: pick!(per_class, 50),
        holdout: pick!(holdout, 0),
        images: args.images.clone().or(file.images),
        labels: args.labels.clone().or(file.labels),
        data_file: args.data_file.clone().or(file.data_file),
        normalize,
        p: pick!(p, 2),
        o_test: pick!(o_test, 0.75),
        act,
        depth: pick!(depth, 1),
        params,
        seeds: pick!(seeds, 50),
        base_seed: pick!(base_seed, 0),
        lr: pick!(lr, 0.01),
        width: pick!(width, 500),
        n0: pick!(n0, 50),
        bin_width: pick!(bin_width, 0.05),
        out: pick!(out, PathBuf::from(default_out)),
    };
    if let Some(n) = args.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(run)
}

type Result2<T> = std::result::Result<T, CliError>;

fn load_slice(run: &Run) -> Result2<DatasetSlice> {
    let (a, b) = run.classes;
    let mut slice = match run.dataset.as_str() {
        "mnist" => {
            let images = run
                .images
                .clone()
                .unwrap_or_else(|| data_dir().join("train-images-idx3-ubyte.gz"));
            let labels = run
                .labels
                .clone()
                .unwrap_or_else(|| data_dir().join("train-labels-idx1-ubyte.gz"));
            load_idx(&images, &labels, a, b, run.per_class, run.normalize)?
        }
        "cifar" => {
            let path = run
                .data_file
                .clone()
                .unwrap_or_else(|| data_dir().join("data_batch_1.bin"));
            load_cifar_binary(&path, a, b, run.per_class, run.normalize)?
        }
        other => {
            return Err(CliError::Config(format!(
                "dataset '{other}' has no image loader; use mnist or cifar"
            )))
        }
    };
    for _ in 0..run.holdout.min(slice.inputs.len().saturating_sub(2)) {
        slice.test_inputs.push(slice.inputs.pop().unwrap());
        slice.test_labels.push(slice.labels.pop().unwrap());
    }
    Ok(slice)
}

/// Builds the LearningProblem for the resolved dataset along with its train
/// labels (used by the drift readout).
fn load_problem(run: &Run) -> Result2<(LearningProblem, Vec<f64>)> {
    if run.dataset == "synthetic" {
        let spec = SyntheticSpec::new(run.p, run.o_test)?;
        let problem = synthetic_problem(&spec, run.act, run.depth, &run.params)?;
        let labels = (0..run.p)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Ok((problem, labels))
    } else {
        let slice = load_slice(run)?;
        let labels = slice.labels.clone();
        Ok((build_problem(&slice, run.act, run.depth, &run.params)?, labels))
    }
}

fn sidecar(run: &Run, subcommand: &str, extra: serde_json::Value) -> Result2<()> {
    let meta = json!({
        "subcommand": subcommand,
        "dataset": run.dataset,
        "act": run.act.to_string(),
        "depth": run.depth,
        "temperature": run.params.temperature,
        "sigma2": run.params.sigma2,
        "sigma0_2": run.params.sigma0_2,
        "dt": run.params.dt,
        "t_max": run.params.t_max,
        "base_seed": run.base_seed,
        "extra": extra,
    });
    let path = run.out.with_extension("json");
    std::fs::write(&path, serde_json::to_string_pretty(&meta).unwrap())
        .map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn cmd_kernel(args: &Common) -> Result2<()> {
    let run = resolve(args, "kernel.csv", Some(5.0))?;
    let g = KernelInputs::new(1.0, run.o_test, 1.0)?;
    let grid = TimeGrid::uniform(run.params.dt, run.params.t_max)?;
    let mut w = table::writer(&run.out)?;
    table::header(&mut w, &["t", "t_prime", "kd", "k", "kdot"])?;
    for &t in grid.times() {
        for &tp in grid.times() {
            let kd = ndk(run.act, run.depth, &run.params, t, tp, &g)?;
            let k = nngp_two_time(run.act, run.depth, &run.params, t, tp, &g)?;
            let kdot = deriv_two_time(run.act, run.depth, &run.params, t, tp, &g)?;
            table::row(&mut w, &[t, tp, kd, k, kdot])?;
        }
    }
    table::finish(w, &run.out)?;
    sidecar(&run, "kernel", json!({ "overlap": run.o_test }))
}

fn cmd_trajectory(args: &Common) -> Result2<()> {
    let run = resolve(args, "trajectory.csv", None)?;
    let (problem, _) = load_problem(&run)?;
    let grid = if run.params.t_max > 100.0 * run.params.dt * 50.0 {
        TimeGrid::two_scale(run.params.dt, 5.0_f64.min(run.params.t_max / 2.0), run.params.t_max / 1e4, run.params.t_max)?
    } else {
        TimeGrid::uniform(run.params.dt, run.params.t_max)?
    };
    let traj = solve_mean_predictor(&problem, &grid)?;
    let ntk_ref = NtkReference::new(&problem)?;
    let (nngp_train, nngp_test) = nngp_equilibrium_predictor(&problem)?;

    let p = traj.f_train[0].len();
    let k = traj.f_test[0].len();
    let mut cols = vec!["t".to_string()];
    cols.extend((0..p).map(|i| format!("f_train_{i}")));
    cols.extend((0..k).map(|i| format!("f_test_{i}")));
    cols.extend((0..p).map(|i| format!("ntk_train_{i}")));
    cols.extend((0..k).map(|i| format!("ntk_test_{i}")));
    let mut w = table::writer(&run.out)?;
    let names: Vec<&str> = cols.iter().map(String::as_str).collect();
    table::header(&mut w, &names)?;
    for (i, &t) in traj.times.iter().enumerate() {
        let (nt, ns) = ntk_ref.eval(t);
        let mut rec = vec![t];
        rec.extend(traj.f_train[i].iter());
        rec.extend(traj.f_test[i].iter());
        rec.extend(nt.iter());
        rec.extend(ns.iter());
        table::row(&mut w, &rec)?;
    }
    table::finish(w, &run.out)?;

    let targets: Vec<f64> = problem.tests.iter().map(|tp| tp.target).collect();
    let stopping = if k > 0 {
        let es = find_early_stopping(&traj.times, &traj.f_test, &targets, run.params.temperature)?;
        json!({
            "t_star": es.t_star,
            "delta_t_scaled": es.delta_t_scaled,
            "mse_at_t_star": es.mse_at_t_star,
            "mse_at_t_max": es.mse_at_t_max,
        })
    } else {
        json!(null)
    };
    sidecar(
        &run,
        "trajectory",
        json!({
            "ntk_crossover": traj.ntk_crossover,
            "early_stopping": stopping,
            "nngp_equilibrium_train": nngp_train.as_slice(),
            "nngp_equilibrium_test": nngp_test,
        }),
    )
}

fn cmd_langevin(args: &Common) -> Result2<()> {
    let run = resolve(args, "langevin.csv", Some(60.0))?;
    if run.dataset != "synthetic" {
        return Err(CliError::Config(
            "langevin comparison supports only the synthetic dataset".into(),
        ));
    }
    if run.n0 < run.p + 1 {
        return Err(CliError::Config(format!(
            "--n0 {} too small for p = {}",
            run.n0, run.p
        )));
    }
    let s = (run.n0 as f64).sqrt();
    let train_inputs: Vec<DVector<f64>> = (0..run.p)
        .map(|mu| {
            let mut v = DVector::zeros(run.n0);
            v[mu] = s;
            v
        })
        .collect();
    let targets: Vec<f64> = (0..run.p)
        .map(|mu| if mu % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let mut xt = DVector::zeros(run.n0);
    xt[0] = run.o_test * s;
    xt[run.p] = (1.0 - run.o_test * run.o_test).sqrt() * s;

    let n_checks = 12usize;
    let t_lo = (run.lr * 10.0).max(run.params.t_max / 1e3);
    let checkpoints: Vec<f64> = (0..n_checks)
        .map(|i| t_lo * (run.params.t_max / t_lo).powf(i as f64 / (n_checks - 1) as f64))
        .collect();
    let cfg = SimConfig {
        widths: vec![run.n0, run.width],
        act: run.act,
        params: run.params,
        lr: run.lr,
        n_seeds: run.seeds,
        base_seed: run.base_seed,
        checkpoints,
        mode: SimMode::FullLearning,
    };
    let sim_problem = SimProblem {
        train_inputs,
        targets,
        test_inputs: vec![xt],
    };
    let ens = run_ensemble(&cfg, &sim_problem)?;

    let grid = TimeGrid::uniform(run.params.dt, run.params.t_max)?;
    let theory = solve_synthetic_reduced(run.act, run.depth, &run.params, run.o_test, &grid)?;

    let mut w = table::writer(&run.out)?;
    table::header(&mut w, &["t", "theory_test", "sim_mean", "sim_stderr", "z"])?;
    let mut max_z = 0.0f64;
    for (c, &t) in ens.checkpoint_times.iter().enumerate() {
        let th = theory.f_test[grid.nearest_index(t)];
        let (m, se) = (ens.test_mean[c][0], ens.test_stderr[c][0]);
        let z = if se > 0.0 { (m - th) / se } else { 0.0 };
        max_z = max_z.max(z.abs());
        table::row(&mut w, &[t, th, m, se, z])?;
    }
    table::finish(w, &run.out)?;
    sidecar(
        &run,
        "langevin",
        json!({ "width": run.width, "seeds": run.seeds, "lr": run.lr, "max_abs_z": max_z }),
    )
}

fn cmd_drift(args: &Common) -> Result2<()> {
    let run = resolve(args, "drift.csv", None)?;
    let (problem, labels) = load_problem(&run)?;
    let drift = EquilibriumDrift::new(&problem)?;

    let scale = run.params.sigma2 / run.params.temperature;
    let n_lags = 40usize;
    let mut lags = vec![0.0];
    lags.extend((0..n_lags).map(|i| {
        1e-3 * (60.0f64 / 1e-3).powf(i as f64 / (n_lags - 1) as f64) * scale
    }));

    let mut acc_w = table::writer(&run.out)?;
    table::header(&mut acc_w, &["lag", "accuracy"])?;
    let hist_path = run.out.with_extension("hist.csv");
    let mut hist_w = table::writer(&hist_path)?;
    table::header(&mut hist_w, &["lag", "bin", "count"])?;
    for &lag in &lags {
        let values: Vec<f64> = (0..problem.size())
            .map(|mu| drift.train_predictor(mu, lag))
            .collect::<ndk_core::Result<_>>()?;
        let acc = drift_readout_accuracy(&values, &labels)?;
        table::row(&mut acc_w, &[lag, acc])?;
        for (bin, count) in histogram(&values, run.bin_width) {
            table::row(&mut hist_w, &[lag, bin, count as f64])?;
        }
    }
    table::finish(acc_w, &run.out)?;
    table::finish(hist_w, &hist_path)?;
    sidecar(&run, "drift", json!({ "bin_width": run.bin_width, "n_lags": lags.len() }))
}

fn cmd_equilibria(args: &Common) -> Result2<()> {
    let run = resolve(args, "equilibria.csv", None)?;
    let mut problems = Vec::new();
    for depth in 1..=run.depth {
        let mut sub = run.clone();
        sub.depth = depth;
        let (problem, _) = load_problem(&sub)?;
        problems.push(problem);
    }
    let rows = equilibria_compare(&problems)?;
    let mut w = table::writer(&run.out)?;
    table::header(&mut w, &["depth", "ntk_test_mse", "nngp_test_mse"])?;
    for (i, row) in rows.iter().enumerate() {
        table::row(&mut w, &[(i + 1) as f64, row.ntk_test_mse, row.nngp_test_mse])?;
    }
    table::finish(w, &run.out)?;
    sidecar(&run, "equilibria", json!({ "max_depth": run.depth }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Kernel(a) => cmd_kernel(a),
        Cmd::Trajectory(a) => cmd_trajectory(a),
        Cmd::Langevin(a) => cmd_langevin(a),
        Cmd::Drift(a) => cmd_drift(a),
        Cmd::Equilibria(a) => cmd_equilibria(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
