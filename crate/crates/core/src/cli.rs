//! Command-line front end: `gen`, `train-target`, `attack`, `bench`, `rank`.
//!
//! Every command writes its outputs plus a `config.json` echo into `--out`.
//! Diagnostics go to stderr; stdout carries a JSON result only with `--json`.
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::attack::{attack_testset, AttackConfig, AttackError};
use crate::bench::{friedman_nemenyi, run_benchmark, BenchError, BenchSpec, ResultTable};
use crate::graph::{read_dataset, write_dataset, GraphDataset, Split};
use crate::learners::{LearnError, SurrogateKind};
use crate::perturb::{PerturbError, Strategy};
use crate::synth::{generate, GeneratorConfig, SynthError};
use crate::target::{train_target, BlackBoxTarget, OracleMode, TargetError, TargetModel};
use crate::wl::DEFAULT_WL_ITERATIONS;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<AttackError> for CliError {
    fn from(e: AttackError) -> Self {
        match e {
            AttackError::InvalidConfig(_)
            | AttackError::Perturb(PerturbError::InvalidRatio(_))
            | AttackError::Perturb(PerturbError::BudgetExceedsPairs { .. }) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Attack(a) => a.into(),
            BenchError::Synth(s) => s.into(),
            BenchError::InvalidConfig(_) | BenchError::UnsupportedAlpha(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<TargetError> for CliError {
    fn from(e: TargetError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Parser)]
#[command(name = "advlcd", version, about = "Black-box evasion attacks on WL-kernel graph classifiers")]
pub struct Cli {
    /// Print the command result as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene-graph dataset.
    Gen(GenArgs),
    /// Train the victim classifier on a dataset's training split.
    TrainTarget(TrainArgs),
    /// Attack a trained target on a dataset's test split.
    Attack(AttackArgs),
    /// Run a benchmark spec and rank the methods.
    Bench(BenchArgs),
    /// Re-rank an existing result table.
    Rank(RankArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator config (JSON); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Class separation; 0 makes the classes indistinguishable.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub n_graphs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WL_ITERATIONS)]
    pub wl_iters: usize,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Attack config (JSON); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub surrogate: Option<SurrogateKind>,
    #[arg(long)]
    pub wl_iters: Option<usize>,
    #[arg(long)]
    pub max_queries: Option<usize>,
    #[arg(long)]
    pub k_candidates: Option<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long, default_value = "score")]
    pub oracle: OracleMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Benchmark spec (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub spec: Option<PathBuf>,
    /// Built-in spec: `strategy-sweep` or `surrogate-comparison`.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Result table CSV written by `bench`.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("config serializes");
    s.push('\n');
    s
}

fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn load_dataset(path: &Path) -> Result<GraphDataset> {
    read_dataset(path).map_err(|e| CliError::Runtime(e.to_string()))
}

/// The tagged split, or the whole dataset when no graph carries that tag.
fn split_or_all(ds: &GraphDataset, split: Split) -> GraphDataset {
    let sub = ds.subset(split);
    if sub.is_empty() && ds.splits().iter().all(Option::is_none) {
        ds.clone()
    } else {
        sub
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(pool.install(f))
}

pub fn cmd_gen(args: &GenArgs) -> Result<serde_json::Value> {
    let mut cfg: GeneratorConfig = match &args.config {
        Some(p) => read_json_config(p)?,
        None => GeneratorConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(d) = args.delta {
        cfg.delta = d;
    }
    if let Some(n) = args.n_graphs {
        cfg.n_graphs_per_class = n;
    }
    cfg.validate()?;
    let ds = generate(&cfg)?;
    ensure_dir(&args.out)?;
    let data_path = args.out.join("dataset.jsonl");
    write_dataset(&ds, &data_path).map_err(|e| CliError::Runtime(e.to_string()))?;
    let manifest = json!({
        "seed": cfg.seed,
        "config_hash": config_hash(&cfg),
        "separability": if cfg.is_separable() { "separable" } else { "non-separable" },
        "graphs": ds.len(),
        "train": ds.subset(Split::Train).len(),
        "test": ds.subset(Split::Test).len(),
        "dataset": "dataset.jsonl",
    });
    write_file(&args.out.join("manifest.json"), pretty(&manifest))?;
    write_file(&args.out.join("config.json"), pretty(&cfg))?;
    if !cfg.is_separable() {
        eprintln!("warning: delta = 0, the two classes are identically distributed");
    }
    eprintln!("wrote {} graphs to {}", ds.len(), data_path.display());
    Ok(manifest)
}

pub fn cmd_train_target(args: &TrainArgs) -> Result<serde_json::Value> {
    if !(args.c > 0.0) {
        return Err(CliError::Config(format!("C must be > 0, got {}", args.c)));
    }
    let ds = load_dataset(&args.dataset)?;
    let train = split_or_all(&ds, Split::Train);
    let test = ds.subset(Split::Test);
    let model = train_target(&train, args.wl_iters, args.c).map_err(|e| match e {
        TargetError::Learn(LearnError::DegenerateLabels) => CliError::Runtime(format!(
            "{}: training split needs both classes",
            args.dataset.display()
        )),
        other => other.into(),
    })?;
    let train_accuracy = model.accuracy(&train)?;
    let test_accuracy = if test.is_empty() { None } else { Some(model.accuracy(&test)?) };
    ensure_dir(&args.out)?;
    model.save(args.out.join("target.json"))?;
    let echo = json!({
        "dataset": args.dataset,
        "wl_iterations": args.wl_iters,
        "c": args.c,
    });
    write_file(&args.out.join("config.json"), pretty(&echo))?;
    let metrics = json!({
        "train_graphs": train.len(),
        "test_graphs": test.len(),
        "train_accuracy": train_accuracy,
        "test_accuracy": test_accuracy,
    });
    write_file(&args.out.join("metrics.json"), pretty(&metrics))?;
    eprintln!(
        "train accuracy {train_accuracy:.4}{}",
        test_accuracy.map_or(String::new(), |a| format!(", test accuracy {a:.4}"))
    );
    Ok(metrics)
}

pub fn cmd_attack(args: &AttackArgs, workers: Option<usize>) -> Result<serde_json::Value> {
    let mut cfg: AttackConfig = match &args.config {
        Some(p) => read_json_config(p)?,
        None => AttackConfig::default(),
    };
    macro_rules! set {
        ($($field:ident <- $flag:ident),*) => {
            $(if let Some(v) = args.$flag { cfg.$field = v; })*
        };
    }
    set!(seed <- seed, r <- r, strategy <- strategy, surrogate <- surrogate, wl_iterations <- wl_iters,
         max_queries <- max_queries, k_candidates <- k_candidates, rounds <- rounds);
    cfg.validate()?;
    let model = TargetModel::load(&args.model)?;
    let ds = load_dataset(&args.dataset)?;
    let test = split_or_all(&ds, Split::Test);
    let oracle = BlackBoxTarget::new(model, args.oracle);
    let summary = with_pool(workers, || attack_testset(&oracle, &test, &cfg))??;
    ensure_dir(&args.out)?;
    write_file(&args.out.join("summary.json"), summary.to_json())?;
    let echo = json!({
        "model": args.model,
        "dataset": args.dataset,
        "oracle": args.oracle,
        "attack": cfg,
    });
    write_file(&args.out.join("config.json"), pretty(&echo))?;
    eprintln!(
        "clean accuracy {:.4}, attacked accuracy {:.4}, decline {:.2} pp, {} queries",
        summary.clean_accuracy, summary.attacked_accuracy, summary.decline, summary.total_queries
    );
    Ok(json!({
        "clean_accuracy": summary.clean_accuracy,
        "attacked_accuracy": summary.attacked_accuracy,
        "decline": summary.decline,
        "total_queries": summary.total_queries,
        "seed": cfg.seed,
    }))
}

fn write_rank_outputs(table: &ResultTable, alpha: f64, out: &Path, suffix: &str) -> Result<Option<serde_json::Value>> {
    if table.methods().len() < 2 || table.blocks().len() < 2 {
        return Ok(None);
    }
    let report = friedman_nemenyi(table, alpha)?;
    write_file(&out.join(format!("rank{suffix}.json")), report.to_json())?;
    write_file(&out.join(format!("rank{suffix}.csv")), report.to_csv())?;
    write_file(&out.join(format!("cd{suffix}.txt")), report.cd_diagram())?;
    Ok(Some(json!({
        "mean_ranks": report.methods.iter().zip(&report.mean_ranks).collect::<Vec<_>>(),
        "friedman_statistic": report.friedman_statistic,
        "p_value": report.p_value,
        "critical_difference": report.critical_difference,
        "best": report.best_method(),
    })))
}

pub fn cmd_bench(args: &BenchArgs, workers: Option<usize>) -> Result<serde_json::Value> {
    let spec = match (&args.spec, args.preset.as_deref()) {
        (Some(p), _) => read_json_config::<BenchSpec>(p)?,
        (None, Some("strategy-sweep")) => BenchSpec::strategy_sweep(),
        (None, Some("surrogate-comparison")) => BenchSpec::surrogate_comparison(),
        (None, Some(other)) => return Err(CliError::Config(format!("unknown preset `{other}`"))),
        (None, None) => return Err(CliError::Config("either --spec or --preset is required".into())),
    };
    spec.validate()?;
    let outcome = run_benchmark(&spec, workers)?;
    ensure_dir(&args.out)?;
    write_file(&args.out.join("config.json"), pretty(&spec))?;
    let mut reports = Vec::new();
    for (i, bt) in outcome.tables.iter().enumerate() {
        write_file(&args.out.join(format!("results_{i}.csv")), bt.table.to_csv())?;
        let rank = write_rank_outputs(&bt.table, spec.alpha, &args.out, &format!("_{i}"))?;
        reports.push(json!({ "r": bt.r, "rank": rank }));
    }
    write_file(&args.out.join("budget_sweep.csv"), outcome.budget_sweep_csv())?;
    let mut acc = String::from("config,repetition,clean_accuracy\n");
    for (d, row) in outcome.clean_accuracy.iter().enumerate() {
        for (rep, a) in row.iter().enumerate() {
            acc.push_str(&format!("{},{rep},{a}\n", spec.datasets[d].name));
        }
    }
    write_file(&args.out.join("clean_accuracy.csv"), acc)?;
    write_file(&args.out.join("audit.json"), pretty(&outcome.audit))?;
    if !outcome.audit.is_clean() {
        return Err(CliError::Runtime(format!(
            "attack audit found {} violations (see audit.json)",
            outcome.audit.violations.len()
        )));
    }
    eprint!("{}", outcome.budget_sweep_csv());
    Ok(json!({ "budgets": reports, "audit_records": outcome.audit.records }))
}

pub fn cmd_rank(args: &RankArgs) -> Result<serde_json::Value> {
    let text = fs::read_to_string(&args.table).map_err(|e| io_err(&args.table, e))?;
    let table = ResultTable::from_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", args.table.display())))?;
    let report = friedman_nemenyi(&table, args.alpha)?;
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_file(&out.join("rank.json"), report.to_json())?;
        write_file(&out.join("rank.csv"), report.to_csv())?;
        write_file(&out.join("cd.txt"), report.cd_diagram())?;
    }
    eprint!("{}", report.cd_diagram());
    Ok(serde_json::to_value(&report).expect("report serializes"))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_CONFIG,
            };
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::TrainTarget(a) => cmd_train_target(a),
        Command::Attack(a) => cmd_attack(a, cli.workers),
        Command::Bench(a) => cmd_bench(a, cli.workers),
        Command::Rank(a) => cmd_rank(a),
    };
    match result {
        Ok(value) => {
            if cli.json {
                println!("{}", serde_json::to_string(&value).expect("json value serializes"));
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
