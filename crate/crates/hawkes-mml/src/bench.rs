//! Benchmark harness: synthetic ground truths, repeated trials, and prior
//! sweeps.
//!
//! A trial simulates one path from a generated truth, runs every requested
//! method on it, and scores the inferred graphs. Fits are memoized per
//! (node, structure, objective) within a trial, so methods that share an
//! objective (the uniform-prior message length, BIC, AIC, plain NLL and
//! the threshold baseline all consume the MLE fit) do not repeat work;
//! reported runtimes are therefore incremental. All randomness flows from
//! the master seed through fixed ChaCha streams, one purpose per stream,
//! so adding methods or trials never shifts the data of existing trials.

use std::io::Write;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::events::{Graph, HawkesModel};
use crate::metrics::{aggregate, score, ScoreReport};
use crate::optim::NelderMeadConfig;
use crate::priors::PriorSpec;
use crate::search::{infer_node_with, rand_graph_result, FitMemo, NodeEvaluator, SearchConfig};
use crate::simulate::{simulate, SimConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Stream purposes of the seed-splitting rule: the per-trial stream id is
/// `(purpose << 32) | trial`.
#[derive(Debug, Clone, Copy)]
pub enum StreamPurpose {
    Truth = 0,
    Simulate = 1,
    Rand = 2,
}

/// ChaCha12 stream for one (purpose, trial) pair under a master seed.
pub fn trial_rng(master_seed: u64, purpose: StreamPurpose, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(((purpose as u64) << 32) | trial);
    rng
}

/// Fixed value or uniform range, written as `0.55` or `[0.1, 0.2]` in the
/// config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    Fixed(f64),
    Range([f64; 2]),
}

impl ValueSpec {
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> f64 {
        match *self {
            ValueSpec::Fixed(v) => v,
            ValueSpec::Range([lo, hi]) => lo + (hi - lo) * rng.random::<f64>(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    /// Unidirectional coupling with self-excitation on the first node.
    Cascade,
    /// Exactly one randomly placed parent per node.
    SingleInput,
    /// Self-excitation everywhere plus Bernoulli off-diagonal edges.
    Bernoulli,
}

fn default_trials() -> usize {
    20
}
fn default_alpha() -> ValueSpec {
    ValueSpec::Fixed(0.55)
}
fn default_mu() -> ValueSpec {
    ValueSpec::Fixed(0.5)
}
fn default_beta() -> f64 {
    1.0
}
fn default_bernoulli() -> f64 {
    0.3
}
fn default_prior_b() -> f64 {
    1e5
}
fn default_prior_c() -> f64 {
    1e-5
}
fn default_threshold() -> f64 {
    crate::criteria::MLE_THR_DEFAULT
}
fn default_max_events() -> usize {
    crate::simulate::DEFAULT_MAX_EVENTS
}
fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// Full description of one experiment; serializable as the `bench` config
/// file (TOML, key-value).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub setting: Setting,
    pub p: usize,
    pub horizon: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: ValueSpec,
    #[serde(default = "default_mu")]
    pub mu: ValueSpec,
    #[serde(default = "default_bernoulli")]
    pub bernoulli_prob: f64,
    /// Method names as accepted by the CLI (`mml-u`, `bic`, ...).
    pub methods: Vec<String>,
    #[serde(default = "default_prior_b")]
    pub prior_b: f64,
    #[serde(default = "default_prior_c")]
    pub prior_c: f64,
    #[serde(default)]
    pub max_parents: Option<usize>,
    /// 0 = available hardware parallelism.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_threshold")]
    pub mle_threshold: f64,
    /// Let the all-zero structure compete in the per-node argmin.
    #[serde(default)]
    pub include_empty: bool,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
}

impl ExperimentSpec {
    /// Desk-scale presets mirroring the synthetic study settings; `N = 20`
    /// instead of the full 100 so a run takes minutes, not hours.
    pub fn preset(name: &str) -> Result<Self> {
        let all = vec![
            "mml-u".into(),
            "mml-e".into(),
            "bic".into(),
            "aic".into(),
            "mle-ms".into(),
            "mle-thr".into(),
            "rand".into(),
        ];
        let base = ExperimentSpec {
            schema_version: SCHEMA_VERSION,
            setting: Setting::Cascade,
            p: 7,
            horizon: 200.0,
            trials: 20,
            seed: 42,
            beta: 1.0,
            alpha: ValueSpec::Fixed(0.55),
            mu: ValueSpec::Fixed(0.5),
            bernoulli_prob: 0.3,
            methods: all,
            prior_b: 1e5,
            prior_c: 1e-5,
            max_parents: None,
            workers: 0,
            mle_threshold: default_threshold(),
            include_empty: false,
            max_events: default_max_events(),
        };
        match name {
            "table1-desk" => Ok(base),
            "table2-desk" => Ok(ExperimentSpec {
                setting: Setting::SingleInput,
                ..base
            }),
            "table3-desk" => Ok(ExperimentSpec {
                setting: Setting::Bernoulli,
                alpha: ValueSpec::Range([0.1, 0.2]),
                mu: ValueSpec::Range([0.5, 1.0]),
                prior_b: 4.0,
                prior_c: 0.3,
                ..base
            }),
            "table4-desk" => Ok(ExperimentSpec { beta: 2.0, ..base }),
            other => Err(Error::Config(format!(
                "unknown preset {other:?}; have table1-desk, table2-desk, table3-desk, table4-desk"
            ))),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::Config(format!("bench config: {e}")))?;
        if spec.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported config schema_version {} (expected {})",
                spec.schema_version, SCHEMA_VERSION
            )));
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Checks for the fields feeding `make_truth` only, used when the spec
    /// is built ad hoc for simulation presets.
    pub fn validate_truth_fields(&self) -> Result<()> {
        if self.p == 0 || self.p > 63 {
            return Err(Error::Config("p must be in 1..=63".into()));
        }
        if !(self.bernoulli_prob >= 0.0 && self.bernoulli_prob <= 1.0) {
            return Err(Error::Config("bernoulli_prob must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_truth_fields()?;
        if !(self.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods list is empty".into()));
        }
        for m in &self.methods {
            Criterion::parse(m)?;
        }
        if let Some(m) = self.max_parents {
            if m == 0 || m > self.p {
                return Err(Error::Config(format!(
                    "max_parents must be in 1..={}",
                    self.p
                )));
            }
        }
        Ok(())
    }

    fn search_config(&self, criterion: Criterion) -> SearchConfig {
        let prior = match criterion {
            Criterion::MmlU => Some(PriorSpec::Uniform { b: self.prior_b }),
            Criterion::MmlE => Some(PriorSpec::Exponential { c: self.prior_c }),
            _ => None,
        };
        SearchConfig {
            criterion,
            prior,
            max_parents: self.max_parents,
            optimizer: NelderMeadConfig::default(),
            workers: self.workers,
            seed: 0,
            threshold: self.mle_threshold,
            include_empty: self.include_empty,
            collect_fits: false,
        }
    }
}

/// Ground truth for one trial: the generating model and its adjacency.
pub fn make_truth(spec: &ExperimentSpec, rng: &mut ChaCha12Rng) -> Result<(HawkesModel, Graph)> {
    let p = spec.p;
    let mut adjacency = vec![vec![0u8; p]; p];
    match spec.setting {
        Setting::Cascade => {
            adjacency[0][0] = 1;
            for i in 0..p - 1 {
                adjacency[i + 1][i] = 1;
            }
        }
        Setting::SingleInput => {
            for row in adjacency.iter_mut() {
                row[rng.random_range(0..p)] = 1;
            }
        }
        Setting::Bernoulli => {
            for (i, row) in adjacency.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    if i == j || rng.random::<f64>() < spec.bernoulli_prob {
                        *cell = 1;
                    }
                }
            }
        }
    }
    let mut alpha = vec![vec![0.0_f64; p]; p];
    for i in 0..p {
        for j in 0..p {
            if adjacency[i][j] == 1 {
                alpha[i][j] = spec.alpha.sample(rng);
            }
        }
    }
    let mu = (0..p).map(|_| spec.mu.sample(rng)).collect();
    let model = HawkesModel::new(mu, alpha, vec![vec![spec.beta; p]; p])?;
    Ok((model, Graph::from_rows(adjacency)?))
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodTrial {
    pub method: String,
    pub report: Option<ScoreReport>,
    pub runtime_s: f64,
    pub error: Option<String>,
    #[serde(skip)]
    pub graph: Option<Graph>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub events_total: usize,
    pub methods: Vec<MethodTrial>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_tp_rate: f64,
    pub mean_runtime_s: f64,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub methods: Vec<MethodSummary>,
    pub trials: Vec<TrialRecord>,
    /// Structures evaluated per node by the enumeration criteria; always
    /// equals `sum_k C(p, k)` over the allowed parent counts.
    pub structures_per_node: usize,
    pub workers: usize,
}

fn expected_structures(p: usize, max_parents: Option<usize>) -> usize {
    let m = max_parents.unwrap_or(p).min(p);
    let mut total = 0u128;
    let mut c = 1u128;
    for k in 0..=m {
        if k > 0 {
            c = c * (p as u128 - k as u128 + 1) / k as u128;
        }
        total += c;
    }
    total as usize
}

fn run_trial(spec: &ExperimentSpec, methods: &[Criterion], trial: usize) -> Result<TrialRecord> {
    let mut truth_rng = trial_rng(spec.seed, StreamPurpose::Truth, trial as u64);
    let (model, truth) = make_truth(spec, &mut truth_rng)?;
    let sim_seed = trial_rng(spec.seed, StreamPurpose::Simulate, trial as u64).next_u64();
    let data = simulate(&SimConfig {
        model: model.clone(),
        horizon: spec.horizon,
        seed: sim_seed,
        max_events: spec.max_events,
    })?;
    let rand_seed = trial_rng(spec.seed, StreamPurpose::Rand, trial as u64).next_u64();

    let p = spec.p;
    let mut evaluators = Vec::with_capacity(p);
    let mut memos = Vec::with_capacity(p);
    for i in 0..p {
        evaluators.push(NodeEvaluator::new(
            &data,
            i,
            model.beta_row(i),
            NelderMeadConfig::default(),
        )?);
        memos.push(FitMemo::new());
    }

    let mut records = Vec::with_capacity(methods.len());
    for &criterion in methods {
        let started = Instant::now();
        let outcome: Result<Graph> = if criterion == Criterion::Rand {
            Ok(rand_graph_result(p, rand_seed).graph)
        } else {
            let cfg = spec.search_config(criterion);
            let rows: Result<Vec<_>> = evaluators
                .iter()
                .zip(memos.iter_mut())
                .enumerate()
                .map(|(i, (ev, memo))| infer_node_with(ev, memo, i, p, &cfg))
                .collect();
            rows.map(|rows| {
                debug_assert!(rows.iter().all(|r| r.evaluated == 0
                    || r.evaluated == expected_structures(p, spec.max_parents)
                    || criterion == Criterion::MleThr));
                Graph::from_structures(&rows.iter().map(|r| r.best.clone()).collect::<Vec<_>>())
            })
        };
        let runtime_s = started.elapsed().as_secs_f64();
        match outcome {
            Ok(graph) => {
                let report = score(&graph, &truth)?;
                records.push(MethodTrial {
                    method: criterion.name().to_string(),
                    report: Some(report),
                    runtime_s,
                    error: None,
                    graph: Some(graph),
                });
            }
            Err(e) => records.push(MethodTrial {
                method: criterion.name().to_string(),
                report: None,
                runtime_s,
                error: Some(e.to_string()),
                graph: None,
            }),
        }
    }

    Ok(TrialRecord {
        trial,
        events_total: data.total_events(),
        methods: records,
    })
}

/// Run the full experiment; the result is a pure function of the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let methods: Vec<Criterion> = spec
        .methods
        .iter()
        .map(|m| Criterion::parse(m))
        .collect::<Result<_>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let trials: Result<Vec<TrialRecord>> = pool.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, &methods, t))
            .collect()
    });
    let trials = trials?;

    let mut summaries = Vec::with_capacity(methods.len());
    for criterion in &methods {
        let name = criterion.name();
        let reports: Vec<ScoreReport> = trials
            .iter()
            .flat_map(|t| t.methods.iter())
            .filter(|m| m.method == name)
            .filter_map(|m| m.report.clone())
            .collect();
        let failed = spec.trials - reports.len();
        let (mean_f1, std_f1, mean_tp) = aggregate(&reports);
        let runtimes: Vec<f64> = trials
            .iter()
            .flat_map(|t| t.methods.iter())
            .filter(|m| m.method == name && m.error.is_none())
            .map(|m| m.runtime_s)
            .collect();
        let mean_runtime = if runtimes.is_empty() {
            f64::NAN
        } else {
            runtimes.iter().sum::<f64>() / runtimes.len() as f64
        };
        summaries.push(MethodSummary {
            method: name.to_string(),
            mean_f1,
            std_f1,
            mean_tp_rate: mean_tp,
            mean_runtime_s: mean_runtime,
            failed_trials: failed,
        });
    }

    Ok(ExperimentResult {
        methods: summaries,
        trials,
        structures_per_node: expected_structures(spec.p, spec.max_parents),
        workers: if spec.workers == 0 {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        } else {
            spec.workers
        },
    })
}

/// One row of a prior sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub hyperparameter: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_tp_rate: f64,
    /// Trials excluded at this grid point (e.g. every structure of some
    /// node infinite under a tight uniform bound).
    pub failed_trials: usize,
}

/// Log-spaced grid from `min` to `max` inclusive; a single point
/// collapses to `min`.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max >= min) || points == 0 {
        return Err(Error::Config(format!(
            "grid needs 0 < min <= max and points >= 1 (got {min}..{max} x{points})"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.ln(), max.ln());
    Ok((0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Sweep the prior hyperparameter of one message-length criterion over a
/// grid, reusing trial data (and, for the uniform prior, the MLE fits)
/// across grid points.
pub fn prior_sweep(
    spec: &ExperimentSpec,
    criterion: Criterion,
    grid: &[f64],
) -> Result<Vec<SweepRow>> {
    if !matches!(criterion, Criterion::MmlU | Criterion::MmlE) {
        return Err(Error::Config("sweep applies to mml-u or mml-e".into()));
    }
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    spec.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    // per_trial[t][g]: report at grid point g, None when that point
    // failed for the trial.
    let per_trial: Vec<Vec<Option<ScoreReport>>> = pool.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let run = || -> Result<Vec<Option<ScoreReport>>> {
                    let mut truth_rng = trial_rng(spec.seed, StreamPurpose::Truth, t as u64);
                    let (model, truth) = make_truth(spec, &mut truth_rng)?;
                    let sim_seed =
                        trial_rng(spec.seed, StreamPurpose::Simulate, t as u64).next_u64();
                    let data = simulate(&SimConfig {
                        model: model.clone(),
                        horizon: spec.horizon,
                        seed: sim_seed,
                        max_events: spec.max_events,
                    })?;
                    let p = spec.p;
                    let mut evaluators = Vec::with_capacity(p);
                    let mut memos = Vec::with_capacity(p);
                    for i in 0..p {
                        evaluators.push(NodeEvaluator::new(
                            &data,
                            i,
                            model.beta_row(i),
                            NelderMeadConfig::default(),
                        )?);
                        memos.push(FitMemo::new());
                    }
                    Ok(grid
                        .iter()
                        .map(|&h| {
                            let prior = match criterion {
                                Criterion::MmlU => PriorSpec::uniform(h)?,
                                _ => PriorSpec::exponential(h)?,
                            };
                            let cfg = SearchConfig {
                                prior: Some(prior),
                                ..spec.search_config(criterion)
                            };
                            let rows: Result<Vec<_>> = evaluators
                                .iter()
                                .zip(memos.iter_mut())
                                .enumerate()
                                .map(|(i, (ev, memo))| infer_node_with(ev, memo, i, p, &cfg))
                                .collect();
                            let graph = Graph::from_structures(
                                &rows?.iter().map(|r| r.best.clone()).collect::<Vec<_>>(),
                            );
                            score(&graph, &truth)
                        })
                        .map(|r| r.ok())
                        .collect())
                };
                // Simulation-level failures take out the whole trial.
                run().unwrap_or_else(|_| vec![None; grid.len()])
            })
            .collect()
    });

    Ok(grid
        .iter()
        .enumerate()
        .map(|(g, &h)| {
            let reports: Vec<ScoreReport> = per_trial.iter().filter_map(|t| t[g].clone()).collect();
            let failed = spec.trials - reports.len();
            let (mean_f1, std_f1, mean_tp_rate) = aggregate(&reports);
            SweepRow {
                hyperparameter: h,
                mean_f1,
                std_f1,
                mean_tp_rate,
                failed_trials: failed,
            }
        })
        .collect())
}

/// results CSV: one row per method.
pub fn write_results_csv<W: Write>(result: &ExperimentResult, mut w: W) -> Result<()> {
    writeln!(
        w,
        "method,mean_f1,std_f1,mean_tp_rate,mean_runtime_s,failed_trials"
    )?;
    for m in &result.methods {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6},{:.6},{}",
            m.method, m.mean_f1, m.std_f1, m.mean_tp_rate, m.mean_runtime_s, m.failed_trials
        )?;
    }
    Ok(())
}

/// per-trial diagnostics CSV.
pub fn write_trials_csv<W: Write>(result: &ExperimentResult, mut w: W) -> Result<()> {
    writeln!(w, "trial,method,f1,precision,recall,runtime_s,status")?;
    for t in &result.trials {
        for m in &t.methods {
            match (&m.report, &m.error) {
                (Some(r), _) => writeln!(
                    w,
                    "{},{},{:.6},{:.6},{:.6},{:.6},ok",
                    t.trial, m.method, r.f1, r.precision, r.recall, m.runtime_s
                )?,
                (None, err) => writeln!(
                    w,
                    "{},{},,,,{:.6},failed: {}",
                    t.trial,
                    m.method,
                    m.runtime_s,
                    err.as_deref().unwrap_or("unknown").replace(',', ";")
                )?,
            }
        }
    }
    Ok(())
}

/// sweep CSV: `hyperparameter,mean_f1,mean_tp_rate` per grid point.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "hyperparameter,mean_f1,std_f1,mean_tp_rate")?;
    for r in rows {
        writeln!(
            w,
            "{:e},{:.6},{:.6},{:.6}",
            r.hyperparameter, r.mean_f1, r.std_f1, r.mean_tp_rate
        )?;
    }
    Ok(())
}

/// Human-readable method table.
pub fn render_table(result: &ExperimentResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>9} {:>9} {:>9} {:>12} {:>7}\n",
        "method", "mean F1", "std F1", "TP rate", "runtime [s]", "failed"
    ));
    for m in &result.methods {
        out.push_str(&format!(
            "{:<10} {:>9.3} {:>9.3} {:>9.3} {:>12.3} {:>7}\n",
            m.method, m.mean_f1, m.std_f1, m.mean_tp_rate, m.mean_runtime_s, m.failed_trials
        ));
    }
    out
}
