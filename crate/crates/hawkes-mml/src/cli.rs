//! Command-line surface: simulate, infer, score, bench, sweep, ingest.
//!
//! Every file-writing command drops a `manifest.json` next to its outputs
//! with the resolved configuration, seed, RNG algorithm, code version and
//! timestamps, so any run can be replayed from the manifest alone.
//! Machine-readable results go to files (or stdout for `score`); logs go
//! to stderr. Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical
//! failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{
    self, log_grid, prior_sweep, run_experiment, ExperimentSpec, Setting, StreamPurpose, ValueSpec,
};
use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::events::{EventData, Graph, HawkesModel};
use crate::ingest::{extract_events, load_csv, IngestConfig};
use crate::metrics::score;
use crate::priors::PriorSpec;
use crate::search::{infer_graph, FitStatus, InferenceResult, SearchConfig};
use crate::simulate::{simulate, SimConfig, RNG_ALGORITHM};

#[derive(Debug, Parser)]
#[command(
    name = "hawkes-mml",
    version,
    about = "Granger-causal graph inference for exponential-kernel Hawkes processes"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample an event set from a model on [0, T].
    Simulate(SimulateArgs),
    /// Infer the connectivity graph from an events CSV.
    Infer(InferArgs),
    /// Score a predicted graph against a ground truth.
    Score(ScoreArgs),
    /// Run a multi-trial benchmark experiment.
    Bench(BenchArgs),
    /// Sweep the prior hyperparameter of a message-length criterion.
    Sweep(SweepArgs),
    /// Convert real-valued time series into an events CSV.
    Ingest(IngestArgs),
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    /// Model JSON file (mu, alpha, beta).
    #[arg(long, conflicts_with = "preset")]
    model: Option<PathBuf>,
    /// Generate the model from a synthetic ground-truth preset instead.
    #[arg(long, value_enum, requires = "dims")]
    preset: Option<Setting>,
    /// Dimension when using --preset.
    #[arg(long)]
    dims: Option<usize>,
    /// Nonzero influence value for --preset.
    #[arg(long, default_value_t = 0.55)]
    alpha: f64,
    /// Baseline intensity for --preset.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Decay constant for --preset.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    beta: f64,
    /// Off-diagonal edge probability for --preset bernoulli.
    #[arg(long, default_value_t = 0.3)]
    bernoulli_prob: f64,
    /// Time horizon T.
    #[arg(long, value_parser = positive_f64)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Abort if the path exceeds this many events.
    #[arg(long, default_value_t = crate::simulate::DEFAULT_MAX_EVENTS)]
    max_events: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct InferArgs {
    /// Events CSV (node_id,time).
    #[arg(long)]
    events: PathBuf,
    /// Time horizon T the events were observed on.
    #[arg(long, value_parser = positive_f64)]
    horizon: f64,
    /// Number of nodes; defaults to the largest node id in the file.
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long, value_enum)]
    criterion: Criterion,
    /// Uniform-prior bound b (mml-u).
    #[arg(long, conflicts_with = "prior_preset")]
    prior_b: Option<f64>,
    /// Exponential-prior rate c (mml-e).
    #[arg(long, conflicts_with = "prior_preset")]
    prior_c: Option<f64>,
    /// Named prior preset: sparse (b=1e5, c=1e-5) or mid-dense (b=4, c=0.3).
    #[arg(long)]
    prior_preset: Option<String>,
    /// Known decay constant applied to every pair.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    beta: f64,
    /// Model JSON whose beta matrix replaces the scalar --beta.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Expert bound on parents per node.
    #[arg(long)]
    max_parents: Option<usize>,
    /// Worker threads; 0 = available parallelism.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Seed (used by the rand baseline).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge threshold for mle-thr.
    #[arg(long, default_value_t = crate::criteria::MLE_THR_DEFAULT)]
    threshold: f64,
    /// Let the all-zero structure compete (default keeps the best
    /// non-empty parent set per node).
    #[arg(long)]
    include_empty: bool,
    /// Also write per-structure diagnostics CSV.
    #[arg(long)]
    diagnostics: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ScoreArgs {
    /// Predicted graph JSON.
    #[arg(long)]
    predicted: PathBuf,
    /// Ground-truth graph JSON.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    /// Experiment preset: table1-desk, table2-desk, table3-desk, table4-desk.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Experiment spec as a TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Override the horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the method list (comma separated).
    #[arg(long)]
    methods: Option<String>,
    /// Override the worker count.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    /// Base experiment preset (its method list is ignored).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Criterion to sweep: mml-u or mml-e.
    #[arg(long, value_enum)]
    criterion: Criterion,
    #[arg(long, value_parser = positive_f64)]
    grid_min: f64,
    #[arg(long, value_parser = positive_f64)]
    grid_max: f64,
    #[arg(long, default_value_t = 7)]
    grid_points: usize,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    /// Delimited series file: date column plus one numeric column per node.
    #[arg(long)]
    input: PathBuf,
    /// Rolling window length in samples.
    #[arg(long, default_value_t = 252)]
    window: usize,
    /// Top fraction of the window that registers an event.
    #[arg(long, default_value_t = 0.2)]
    quantile: f64,
    /// Horizon the sample range is mapped onto.
    #[arg(long, default_value_t = 400.0, value_parser = positive_f64)]
    horizon: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    config: serde_json::Value,
    seed: Option<u64>,
    rng_algorithm: String,
    version: String,
    workers: Option<usize>,
    started_at: String,
    finished_at: String,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    notes: Option<serde_json::Value>,
}

struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    seed: Option<u64>,
    workers: Option<usize>,
    started_at: String,
    outputs: Vec<String>,
    notes: Option<serde_json::Value>,
}

impl ManifestBuilder {
    fn new<C: Serialize>(command: &str, config: &C) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            seed: None,
            workers: None,
            started_at: chrono::Utc::now().to_rfc3339(),
            outputs: Vec::new(),
            notes: None,
        })
    }

    fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    fn notes<N: Serialize>(&mut self, notes: &N) -> Result<()> {
        self.notes = Some(serde_json::to_value(notes)?);
        Ok(())
    }

    /// Atomic write: temp file in the target directory, then rename.
    fn write(self, dir: &Path) -> Result<PathBuf> {
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            seed: self.seed,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            workers: self.workers,
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
            outputs: self.outputs,
            notes: self.notes,
        };
        let path = dir.join("manifest.json");
        let tmp = dir.join("manifest.json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(&manifest)? + "\n")?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Score(args) => cmd_score(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Ingest(args) => cmd_ingest(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    ensure_out_dir(&args.out_dir)?;
    let mut manifest = ManifestBuilder::new("simulate", &args)?.seed(args.seed);

    let (model, truth) = match (&args.model, args.preset) {
        (Some(path), None) => (HawkesModel::from_json_file(path)?, None),
        (None, Some(setting)) => {
            let p = args
                .dims
                .ok_or_else(|| Error::Config("--preset needs --dims".into()))?;
            let spec = ExperimentSpec {
                setting,
                p,
                horizon: args.horizon,
                alpha: ValueSpec::Fixed(args.alpha),
                mu: ValueSpec::Fixed(args.mu),
                beta: args.beta,
                bernoulli_prob: args.bernoulli_prob,
                ..ExperimentSpec::preset("table1-desk")?
            };
            spec.validate_truth_fields()?;
            let mut rng = bench::trial_rng(args.seed, StreamPurpose::Truth, 0);
            let (model, graph) = bench::make_truth(&spec, &mut rng)?;
            (model, Some(graph))
        }
        _ => {
            return Err(Error::Config(
                "exactly one of --model or --preset is required".into(),
            ));
        }
    };

    if !model.is_stable() {
        eprintln!(
            "warning: branching spectral radius {:.3} >= 1; the process is super-critical",
            model.spectral_radius()
        );
    }

    let data = simulate(&SimConfig {
        model: model.clone(),
        horizon: args.horizon,
        seed: args.seed,
        max_events: args.max_events,
    })?;

    let events_path = args.out_dir.join("events.csv");
    data.write_csv_file(&events_path)?;
    manifest.output(&events_path);
    let model_path = args.out_dir.join("model.json");
    model.to_json_file(&model_path)?;
    manifest.output(&model_path);
    if let Some(truth) = truth {
        let truth_path = args.out_dir.join("truth.json");
        truth.to_json_file(&truth_path)?;
        manifest.output(&truth_path);
    }
    eprintln!(
        "simulated {} events over {} nodes on [0, {}]",
        data.total_events(),
        data.dims(),
        args.horizon
    );
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn resolve_prior(args: &InferArgs) -> Result<Option<PriorSpec>> {
    if let Some(preset) = &args.prior_preset {
        let spec = match (preset.as_str(), args.criterion) {
            ("sparse", Criterion::MmlU) => PriorSpec::sparse_uniform(),
            ("sparse", Criterion::MmlE) => PriorSpec::sparse_exponential(),
            ("mid-dense", Criterion::MmlU) => PriorSpec::mid_dense_uniform(),
            ("mid-dense", Criterion::MmlE) => PriorSpec::mid_dense_exponential(),
            (other, Criterion::MmlU | Criterion::MmlE) => {
                return Err(Error::Config(format!(
                    "unknown prior preset {other:?}; have sparse, mid-dense"
                )));
            }
            _ => {
                return Err(Error::Config(
                    "--prior-preset applies to mml-u/mml-e only".into(),
                ))
            }
        };
        return Ok(Some(spec));
    }
    match args.criterion {
        Criterion::MmlU => Ok(Some(match args.prior_b {
            Some(b) => PriorSpec::uniform(b).map_err(|e| Error::Config(e.to_string()))?,
            None => PriorSpec::sparse_uniform(),
        })),
        Criterion::MmlE => Ok(Some(match args.prior_c {
            Some(c) => PriorSpec::exponential(c).map_err(|e| Error::Config(e.to_string()))?,
            None => PriorSpec::sparse_exponential(),
        })),
        _ => Ok(None),
    }
}

fn write_diagnostics(result: &InferenceResult, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    use std::io::Write;
    writeln!(
        w,
        "node,gamma,k,status,value,fit,prior,complexity,lattice,preamble"
    )?;
    for node in &result.nodes {
        for fit in &node.fits {
            let status = match fit.status {
                FitStatus::Ok => "ok",
                FitStatus::Degenerate => "degenerate",
                FitStatus::Failed => "failed",
            };
            let parts = fit
                .parts
                .as_ref()
                .map(|p| {
                    format!(
                        "{:.6},{:.6},{:.6},{:.6},{:.6}",
                        p.fit, p.prior, p.complexity, p.lattice, p.preamble
                    )
                })
                .unwrap_or_else(|| ",,,,".to_string());
            writeln!(
                w,
                "{},{},{},{},{:.6},{}",
                node.node + 1,
                fit.structure.bit_string(),
                fit.structure.k(),
                status,
                fit.value,
                parts
            )?;
        }
    }
    Ok(())
}

fn cmd_infer(args: InferArgs) -> Result<()> {
    ensure_out_dir(&args.out_dir)?;
    let mut manifest = ManifestBuilder::new("infer", &args)?
        .seed(args.seed)
        .workers(args.workers);

    let data = EventData::read_csv_file(&args.events, args.horizon, args.dims)?;
    let p = data.dims();
    if let Some(m) = args.max_parents {
        if m == 0 || m > p {
            return Err(Error::Config(format!(
                "--max-parents must be in 1..={p}, got {m}"
            )));
        }
    }
    let beta: Vec<Vec<f64>> = match &args.model {
        Some(path) => {
            let model = HawkesModel::from_json_file(path)?;
            if model.dims() != p {
                return Err(Error::DimensionMismatch(format!(
                    "model has {} nodes, events have {}",
                    model.dims(),
                    p
                )));
            }
            model.beta().to_vec()
        }
        None => vec![vec![args.beta; p]; p],
    };

    let cfg = SearchConfig {
        criterion: args.criterion,
        prior: resolve_prior(&args)?,
        max_parents: args.max_parents,
        optimizer: Default::default(),
        workers: args.workers,
        seed: args.seed,
        threshold: args.threshold,
        include_empty: args.include_empty,
        collect_fits: args.diagnostics,
    };
    let result = infer_graph(&data, &beta, &cfg)?;

    let graph_path = args.out_dir.join("graph.json");
    result.graph.to_json_file(&graph_path)?;
    manifest.output(&graph_path);
    if args.diagnostics {
        let diag_path = args.out_dir.join("diagnostics.csv");
        write_diagnostics(&result, &diag_path)?;
        manifest.output(&diag_path);
    }
    manifest.notes(&serde_json::json!({
        "evaluated_structures_total": result.evaluated_total(),
        "edges": result.graph.edge_count(),
    }))?;
    eprintln!(
        "inferred {} edges over {} nodes ({} structure evaluations)",
        result.graph.edge_count(),
        p,
        result.evaluated_total()
    );
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn cmd_score(args: ScoreArgs) -> Result<()> {
    let predicted = Graph::from_json_file(&args.predicted)?;
    let truth = Graph::from_json_file(&args.truth)?;
    let report = score(&predicted, &truth)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn resolve_spec(preset: &Option<String>, config: &Option<PathBuf>) -> Result<ExperimentSpec> {
    match (preset, config) {
        (Some(name), None) => ExperimentSpec::preset(name),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentSpec::from_toml(&text)
        }
        _ => Err(Error::Config(
            "exactly one of --preset or --config is required".into(),
        )),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    ensure_out_dir(&args.out_dir)?;
    let mut spec = resolve_spec(&args.preset, &args.config)?;
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(h) = args.horizon {
        spec.horizon = h;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(w) = args.workers {
        spec.workers = w;
    }
    if let Some(methods) = &args.methods {
        spec.methods = methods.split(',').map(|s| s.trim().to_string()).collect();
    }
    spec.validate()?;

    let mut manifest = ManifestBuilder::new("bench", &args)?.seed(spec.seed);
    eprintln!(
        "running {} trials of {:?} (p={}, T={}) with {} methods",
        spec.trials,
        spec.setting,
        spec.p,
        spec.horizon,
        spec.methods.len()
    );
    let result = run_experiment(&spec)?;

    let results_path = args.out_dir.join("results.csv");
    bench::write_results_csv(&result, std::fs::File::create(&results_path)?)?;
    manifest.output(&results_path);
    let trials_path = args.out_dir.join("trials.csv");
    bench::write_trials_csv(&result, std::fs::File::create(&trials_path)?)?;
    manifest.output(&trials_path);

    print!("{}", bench::render_table(&result));
    let mut manifest = manifest.workers(result.workers);
    manifest.notes(&serde_json::json!({
        "spec": spec,
        "structures_per_node": result.structures_per_node,
    }))?;
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    ensure_out_dir(&args.out_dir)?;
    if !matches!(args.criterion, Criterion::MmlU | Criterion::MmlE) {
        return Err(Error::Config("--criterion must be mml-u or mml-e".into()));
    }
    let mut spec = resolve_spec(&args.preset, &args.config)?;
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(w) = args.workers {
        spec.workers = w;
    }
    let grid = log_grid(args.grid_min, args.grid_max, args.grid_points)?;

    let mut manifest = ManifestBuilder::new("sweep", &args)?.seed(spec.seed);
    let rows = prior_sweep(&spec, args.criterion, &grid)?;
    let sweep_path = args.out_dir.join("sweep.csv");
    bench::write_sweep_csv(&rows, std::fs::File::create(&sweep_path)?)?;
    manifest.output(&sweep_path);
    manifest.notes(&serde_json::json!({ "spec": spec, "grid": grid }))?;
    for row in &rows {
        eprintln!(
            "hyper={:>10.3e}  mean F1 {:.3}  TP rate {:.3}",
            row.hyperparameter, row.mean_f1, row.mean_tp_rate
        );
    }
    manifest.write(&args.out_dir)?;
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    ensure_out_dir(&args.out_dir)?;
    let mut manifest = ManifestBuilder::new("ingest", &args)?;
    let table = load_csv(&args.input)?;
    let cfg = IngestConfig {
        window: args.window,
        quantile: args.quantile,
        horizon: args.horizon,
    };
    let (data, report) = extract_events(&table, &cfg)?;
    let events_path = args.out_dir.join("events.csv");
    data.write_csv_file(&events_path)?;
    manifest.output(&events_path);
    for (name, count) in table.names.iter().zip(&report.counts) {
        eprintln!("{name}: {count} events");
    }
    manifest.notes(&serde_json::json!({
        "columns": table.names,
        "counts": report.counts,
        "usable_samples": report.usable_samples,
    }))?;
    manifest.write(&args.out_dir)?;
    Ok(())
}
