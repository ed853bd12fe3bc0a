//! `ecekde`: calibration-error estimates, bandwidth selection and synthetic studies
//! from the command line.

mod input;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use ecekde::{
    bootstrap_ci, convergence_study, debias_study, doane_bins, ece_bin_canonical, ece_bin_toplabel, ece_kde_canonical, ece_kde_marginal, ece_kde_toplabel,
    gen_synthetic, loo_log_likelihood, select_bandwidth, Bandwidth, BandwidthChoice, BandwidthGrid, Debias, KdeConfig,
    LabeledDataset, RngSeed, StudyEstimator, StudyResult, SyntheticSpec, TopLabelBinning,
};
use thiserror::Error;

use output::{fmt_f64, study_csv, to_json, Interval, ResultRecord};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn data(e: impl ToString) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Parser)]
#[command(name = "ecekde", version, about = "Kernel density estimates of calibration error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate calibration error from a prediction file.
    Estimate(EstimateArgs),
    /// Select a bandwidth by leave-one-out likelihood.
    Bandwidth(BandwidthArgs),
    /// Write a synthetic prediction file and its true-conditional sidecar.
    Synth(SynthArgs),
    /// Run the convergence study against Monte Carlo ground truth.
    Converge(ConvergeArgs),
    /// Run the sharpness debiasing study.
    DebiasDemo(DebiasArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Canonical,
    Marginal,
    Toplabel,
}

#[derive(Clone, Copy, ValueEnum)]
enum DebiasArg {
    None,
    First,
    Second,
}

impl From<DebiasArg> for Debias {
    fn from(d: DebiasArg) -> Self {
        match d {
            DebiasArg::None => Debias::None,
            DebiasArg::First => Debias::FirstOrder,
            DebiasArg::Second => Debias::SecondOrder,
        }
    }
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["bandwidth", "bandwidth_grid", "bins"])))]
struct EstimateArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "canonical")]
    kind: Kind,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Comma-separated candidates, or `default` for 20 log-spaced values in [1e-4, 10].
    #[arg(long)]
    bandwidth_grid: Option<String>,
    /// Histogram estimate instead of the kernel estimate: bins per class (top-label:
    /// total bins), or `doane` to apply Doane's formula to the binned scores.
    #[arg(long)]
    bins: Option<String>,
    /// Count-balanced top-label bins.
    #[arg(long, requires = "bins")]
    adaptive: bool,
    #[arg(long, value_enum, default_value = "none")]
    debias: DebiasArg,
    /// Report CE_p instead of CE_p^p.
    #[arg(long)]
    root: bool,
    /// Number of bootstrap resamples for a 95% interval.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Treat the columns as logits and apply a softmax.
    #[arg(long)]
    logits: bool,
}

#[derive(Args)]
struct BandwidthArgs {
    file: PathBuf,
    #[arg(long, default_value = "default")]
    grid: String,
    #[arg(long)]
    logits: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long = "K", alias = "k")]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.6)]
    t1: f64,
    #[arg(long, default_value_t = 0.6)]
    t2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Prediction CSV; the sidecar goes next to it with a `.truth.csv` suffix.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long = "K", alias = "k", default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 0.6)]
    t1: f64,
    #[arg(long, default_value_t = 0.6)]
    t2: f64,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value = "250,500,1000,2000,4000,8000,16000,20000")]
    n_grid: String,
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    /// Comma-separated: `kde` and `bin<B>` for B bins per class.
    #[arg(long, default_value = "kde,bin2,bin3,bin4")]
    estimators: String,
    /// Fixed kernel bandwidth; by default it is selected by leave-one-out likelihood.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Select the bandwidth once per sample size instead of once per dataset.
    #[arg(long)]
    select_once: bool,
    #[arg(long, default_value_t = 10_000_000)]
    reference_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes `<out>.csv` and `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DebiasArgs {
    #[arg(long, default_value = "32,64,128,256,512,1024,2048,4096,8192,16384")]
    n_list: String,
    /// Repetitions per sample size; `--full` raises the default to 10000.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = 0.5)]
    h: f64,
    #[arg(long, default_value_t = 0.17)]
    location: f64,
    #[arg(long, default_value_t = 10_000_000)]
    reference_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| usage(format!("{what}: {v:?}: {e}"))))
        .collect()
}

fn parse_grid(s: &str) -> Result<BandwidthGrid, CliError> {
    if s.trim() == "default" {
        return Ok(BandwidthGrid::default());
    }
    BandwidthGrid::new(parse_list(s, "bandwidth grid")?).map_err(usage)
}

#[derive(Clone, Copy)]
enum Bins {
    Fixed(usize),
    Doane,
}

#[derive(Clone, Copy)]
enum Method {
    Kernel(KdeConfig),
    Binned { count: usize, scheme: TopLabelBinning },
}

fn parse_bins(s: &str) -> Result<Bins, CliError> {
    if s.trim() == "doane" {
        return Ok(Bins::Doane);
    }
    match s.trim().parse::<usize>() {
        Ok(b) if b > 0 => Ok(Bins::Fixed(b)),
        _ => Err(usage(format!("--bins expects a positive count or `doane`, got {s:?}"))),
    }
}

/// Scores Doane's formula is applied to: confidences for top-label bins, every
/// probability coordinate for the simplex lattice.
fn binned_scores(ds: &LabeledDataset, kind: Kind) -> Vec<f64> {
    match kind {
        Kind::Toplabel => (0..ds.len()).map(|i| ds.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect(),
        _ => ds.points().iter().copied().collect(),
    }
}

fn distinct_sizes(ns: &[usize]) -> Result<(), CliError> {
    let mut v = ns.to_vec();
    v.sort_unstable();
    v.dedup();
    if v.len() < 2 {
        return Err(usage(ecekde::Error::InsufficientGrid));
    }
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<String, CliError> {
    let start = Instant::now();
    if !(a.p.is_finite() && a.p >= 1.0) {
        return Err(usage(format!("--p must be at least 1, got {}", a.p)));
    }
    if matches!(a.debias, DebiasArg::Second) && a.p != 2.0 {
        return Err(usage("--debias second requires --p 2"));
    }
    if a.bootstrap.is_some_and(|b| b < 10) {
        return Err(usage("--bootstrap needs at least 10 resamples"));
    }
    if a.bins.is_some() && !matches!(a.debias, DebiasArg::None) {
        return Err(usage("--debias applies to the kernel estimate only"));
    }
    if a.bins.is_some() && matches!(a.kind, Kind::Marginal) {
        return Err(usage("--bins supports --kind canonical or toplabel"));
    }
    let bins = a.bins.as_deref().map(parse_bins).transpose()?;
    let fixed = a.bandwidth.map(Bandwidth::new).transpose().map_err(usage)?;
    let grid = a.bandwidth_grid.as_deref().map(parse_grid).transpose()?;
    let ds = input::read_predictions(&a.file, a.logits)?;
    let (method, h, bin_count) = match bins {
        Some(b) => {
            let count = match b {
                Bins::Fixed(c) => c,
                Bins::Doane => doane_bins(&binned_scores(&ds, a.kind)).map_err(data)?,
            };
            let scheme = if a.adaptive { TopLabelBinning::Adaptive } else { TopLabelBinning::Equal };
            (Method::Binned { count, scheme }, None, Some(count))
        }
        None => {
            let h = match (fixed, grid) {
                (Some(h), _) => h,
                (None, Some(g)) => select_bandwidth(&ds, &g).map_err(data)?,
                (None, None) => unreachable!("clap requires one estimate source"),
            };
            let cfg = KdeConfig::new(h, a.p).with_debias(a.debias.into());
            cfg.validate().map_err(usage)?;
            (Method::Kernel(cfg), Some(h.get()), None)
        }
    };
    let (kind, p) = (a.kind, a.p);
    let run = move |d: &LabeledDataset| -> ecekde::Result<f64> {
        let r = match (method, kind) {
            (Method::Kernel(cfg), Kind::Canonical) => ece_kde_canonical(d, &cfg),
            (Method::Kernel(cfg), Kind::Marginal) => ece_kde_marginal(d, &cfg),
            (Method::Kernel(cfg), Kind::Toplabel) => ece_kde_toplabel(d, &cfg),
            (Method::Binned { count, .. }, Kind::Canonical) => ece_bin_canonical(d, count, p),
            (Method::Binned { count, scheme }, _) => ece_bin_toplabel(d, count, scheme, p),
        }?;
        Ok(r.value)
    };
    let report = |v: f64| if a.root { v.powf(1.0 / a.p) } else { v };
    let value = run(&ds).map_err(data)?;
    let ci = match a.bootstrap {
        Some(b) => {
            let (lo, hi) = bootstrap_ci(&ds, run, b, 0.95, RngSeed(a.seed)).map_err(data)?;
            Some(Interval { lo: report(lo), hi: report(hi) })
        }
        None => None,
    };
    let kind_name = match a.kind {
        Kind::Canonical => "canonical",
        Kind::Marginal => "marginal",
        Kind::Toplabel => "toplabel",
    };
    let debias = match a.debias {
        DebiasArg::None => "none",
        DebiasArg::First => "first",
        DebiasArg::Second => "second",
    };
    Ok(to_json(&ResultRecord {
        estimate: report(value),
        kind: kind_name.into(),
        p: Some(a.p),
        bandwidth: h,
        bins: bin_count,
        debias: debias.into(),
        n: ds.len(),
        k: ds.num_classes(),
        seed: a.seed,
        ci,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

fn bandwidth(a: BandwidthArgs) -> Result<String, CliError> {
    let start = Instant::now();
    let grid = parse_grid(&a.grid)?;
    let ds = input::read_predictions(&a.file, a.logits)?;
    let h = select_bandwidth(&ds, &grid).map_err(data)?;
    let ll = loo_log_likelihood(&ds, h).map_err(data)?;
    Ok(to_json(&ResultRecord {
        estimate: ll,
        kind: "loo_log_likelihood".into(),
        p: None,
        bandwidth: Some(h.get()),
        bins: None,
        debias: "none".into(),
        n: ds.len(),
        k: ds.num_classes(),
        seed: 0,
        ci: None,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.csv"))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn synth(a: SynthArgs) -> Result<String, CliError> {
    let spec = SyntheticSpec { k: a.k, n: a.n, t1: a.t1, t2: a.t2, seed: RngSeed(a.seed) };
    spec.validate().map_err(usage)?;
    let (ds, truth) = gen_synthetic(&spec).map_err(data)?;
    let header = |prefix: &str| {
        std::iter::once("label".to_string()).chain((0..a.k).map(|c| format!("{prefix}_{c}"))).collect::<Vec<_>>().join(",")
    };
    let mut preds = header("p") + "\n";
    let mut side = header("q") + "\n";
    for (i, t) in truth.iter().enumerate() {
        let y = ds.labels()[i];
        let line = |v: &[f64]| {
            std::iter::once(y.to_string()).chain(v.iter().map(|&x| fmt_f64(x))).collect::<Vec<_>>().join(",") + "\n"
        };
        preds += &line(ds.row(i));
        side += &line(t.coords());
    }
    let side_path = sidecar_path(&a.out);
    write(&a.out, &preds)?;
    write(&side_path, &side)?;
    Ok(serde_json::json!({
        "predictions": a.out.display().to_string(),
        "truth": side_path.display().to_string(),
        "n": a.n,
        "K": a.k,
        "seed": a.seed,
    })
    .to_string())
}

fn write_study(out: &Path, result: &StudyResult) -> Result<String, CliError> {
    let json = to_json(result);
    write(&out.with_extension("csv"), &study_csv(result))?;
    write(&out.with_extension("json"), &json)?;
    Ok(json)
}

fn converge(a: ConvergeArgs) -> Result<String, CliError> {
    let ns: Vec<usize> = parse_list(&a.n_grid, "n grid")?;
    distinct_sizes(&ns)?;
    let grid: Vec<SyntheticSpec> =
        ns.iter().map(|&n| SyntheticSpec { k: a.k, n, t1: a.t1, t2: a.t2, seed: RngSeed(a.seed) }).collect();
    for s in &grid {
        s.validate().map_err(usage)?;
    }
    let bandwidth = match a.bandwidth {
        Some(h) => BandwidthChoice::Fixed(Bandwidth::new(h).map_err(usage)?),
        None if a.select_once => BandwidthChoice::SelectOnce(BandwidthGrid::default()),
        None => BandwidthChoice::SelectEach(BandwidthGrid::default()),
    };
    let estimators = a
        .estimators
        .split(',')
        .map(|e| match e.trim() {
            "kde" => Ok(StudyEstimator::KdeCanonical { p: a.p, bandwidth: bandwidth.clone() }),
            other => other
                .strip_prefix("bin")
                .and_then(|b| b.parse::<usize>().ok())
                .filter(|&b| b > 0)
                .map(|b| StudyEstimator::BinCanonical { p: a.p, bins_per_class: b })
                .ok_or_else(|| usage(format!("unknown estimator {other:?}; use kde or bin<B>"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if a.reference_samples < 10_000 {
        return Err(usage("--reference-samples must be at least 10000"));
    }
    let result = convergence_study(&grid, &estimators, a.seeds, a.reference_samples).map_err(usage_or_data)?;
    write_study(&a.out, &result)
}

fn debias_demo(a: DebiasArgs) -> Result<String, CliError> {
    let ns: Vec<usize> = parse_list(&a.n_list, "n list")?;
    distinct_sizes(&ns)?;
    let reps = a.reps.unwrap_or(if a.full { 10_000 } else { 2000 });
    if reps < 100 {
        return Err(usage(format!("--reps must be at least 100, got {reps}")));
    }
    let h = Bandwidth::new(a.h).map_err(usage)?;
    let result =
        debias_study(&ns, reps, h, a.location, RngSeed(a.seed), a.reference_samples).map_err(usage_or_data)?;
    write_study(&a.out, &result)
}

/// Study errors stem from the flags, since the studies generate their own data.
fn usage_or_data(e: ecekde::Error) -> CliError {
    use ecekde::Error as E;
    match e {
        E::InsufficientGrid
        | E::InvalidConfig(_)
        | E::InvalidBandwidth(_)
        | E::InvalidGrid(_)
        | E::NonPositiveTemperature(_)
        | E::InvalidDimension(_)
        | E::BoundaryInput(_)
        | E::TooFewPoints { .. } => usage(e),
        other => data(other),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: THREADS ignored: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    let outcome = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Bandwidth(a) => bandwidth(a),
        Command::Synth(a) => synth(a),
        Command::Converge(a) => converge(a),
        Command::DebiasDemo(a) => debias_demo(a),
    };
    match outcome {
        Ok(doc) => {
            println!("{doc}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
