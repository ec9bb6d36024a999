//! Per-node structure search: enumerate parent sets, fit each by MAP, and
//! keep the structure minimizing the configured criterion.
//!
//! Every node is independent, so rows of the graph are searched on a
//! worker pool; results do not depend on scheduling. Within a node the
//! enumeration order is parent count then ascending bitmask, and ties on
//! the criterion keep the first (sparsest, lowest-mask) structure, which
//! makes the whole search deterministic.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::criteria::{
    aic_criterion, bic_criterion, mle_thr_rule, mml_criterion, rand_rule, Criterion, CriterionValue,
};
use crate::error::{Error, Result};
use crate::events::{EventData, Graph, NodeParams, Structure};
use crate::likelihood::{build_cache, HistoryCache};
use crate::optim::{minimize, NelderMeadConfig};
use crate::priors::PriorSpec;

/// Parameters are optimized as `theta = exp(eta)` clamped below; the clamp
/// keeps the log-determinant away from the exact-zero boundary.
const THETA_FLOOR: f64 = 1e-8;

/// Search settings for one inference run.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub criterion: Criterion,
    /// Prior for the message-length criteria; defaults to the sparse
    /// preset of the matching kind when unset.
    pub prior: Option<PriorSpec>,
    /// Expert bound on the number of parents per node (`1..=p`).
    pub max_parents: Option<usize>,
    pub optimizer: NelderMeadConfig,
    /// Worker count; `0` means available hardware parallelism.
    pub workers: usize,
    /// Seed for the random baseline.
    pub seed: u64,
    /// Edge threshold of the full-MLE baseline.
    pub threshold: f64,
    /// Whether the all-zero structure competes in the argmin. It is
    /// always evaluated (with zero lattice cost) and reported in the
    /// diagnostics; when excluded, every node keeps its best non-empty
    /// parent set, falling back to the empty structure only when no
    /// non-empty structure evaluates. Nodes without events always
    /// degenerate to the empty structure.
    pub include_empty: bool,
    /// Retain per-structure diagnostics on each node result.
    pub collect_fits: bool,
}

impl SearchConfig {
    pub fn new(criterion: Criterion) -> Self {
        Self {
            criterion,
            prior: None,
            max_parents: None,
            optimizer: NelderMeadConfig::default(),
            workers: 0,
            seed: 0,
            threshold: crate::criteria::MLE_THR_DEFAULT,
            include_empty: false,
            collect_fits: false,
        }
    }

    /// Prior actually used, falling back to the sparse presets.
    pub fn resolved_prior(&self) -> Result<Option<PriorSpec>> {
        match self.criterion {
            Criterion::MmlU => match self.prior {
                None => Ok(Some(PriorSpec::sparse_uniform())),
                Some(p @ PriorSpec::Uniform { .. }) => Ok(Some(p)),
                Some(_) => Err(Error::Config("mml-u needs a uniform prior".into())),
            },
            Criterion::MmlE => match self.prior {
                None => Ok(Some(PriorSpec::sparse_exponential())),
                Some(p @ PriorSpec::Exponential { .. }) => Ok(Some(p)),
                Some(_) => Err(Error::Config("mml-e needs an exponential prior".into())),
            },
            _ => Ok(None),
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        if let Some(m) = self.max_parents {
            if m == 0 || m > p {
                return Err(Error::Config(format!(
                    "max_parents must be in 1..={p}, got {m}"
                )));
            }
        }
        Ok(())
    }
}

/// Objective minimized when fitting one structure. The uniform-prior MAP
/// coincides with the MLE (the prior only shifts the objective by a
/// constant inside its box), so the uniform path fits a plain MLE and the
/// box bound is applied when the criterion is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitKind {
    Mle,
    MapExponential { c_bits: u64 },
}

impl FitKind {
    pub fn map_exponential(c: f64) -> Self {
        FitKind::MapExponential {
            c_bits: c.to_bits(),
        }
    }

    pub fn for_criterion(criterion: Criterion, prior: Option<&PriorSpec>) -> FitKind {
        match (criterion, prior) {
            (Criterion::MmlE, Some(PriorSpec::Exponential { c })) => Self::map_exponential(*c),
            _ => FitKind::Mle,
        }
    }

    fn rate(&self) -> f64 {
        match self {
            FitKind::Mle => 0.0,
            FitKind::MapExponential { c_bits } => f64::from_bits(*c_bits),
        }
    }
}

/// Result of fitting one (node, structure, objective) triple.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub theta: NodeParams,
    pub nll: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    Ok,
    /// Node has no events; only the empty structure is reported.
    Degenerate,
    /// Optimizer failure or criterion-evaluation failure; skipped.
    Failed,
}

/// Diagnostics for one evaluated structure.
#[derive(Debug, Clone)]
pub struct NodeFit {
    pub structure: Structure,
    pub theta: Option<NodeParams>,
    pub value: f64,
    pub parts: Option<CriterionValue>,
    pub status: FitStatus,
}

/// Outcome of the structure search for one node.
#[derive(Debug, Clone)]
pub struct NodeSearchResult {
    pub node: usize,
    pub best: Structure,
    pub best_value: f64,
    pub status: FitStatus,
    /// Number of structures evaluated.
    pub evaluated: usize,
    /// Per-structure diagnostics when requested.
    pub fits: Vec<NodeFit>,
}

/// Fits one node's structures against its precomputed history cache.
pub struct NodeEvaluator {
    cache: HistoryCache,
    optimizer: NelderMeadConfig,
}

impl NodeEvaluator {
    pub fn new(
        data: &EventData,
        node: usize,
        beta_row: &[f64],
        optimizer: NelderMeadConfig,
    ) -> Result<Self> {
        Ok(Self {
            cache: build_cache(data, node, beta_row)?,
            optimizer,
        })
    }

    pub fn cache(&self) -> &HistoryCache {
        &self.cache
    }

    /// MAP (or MLE) fit of `gamma`. The `k = 0` case has a closed form.
    pub fn fit(&self, gamma: &Structure, kind: FitKind) -> FitOutcome {
        let restricted = self.cache.restrict(gamma);
        let n = self.cache.n_events() as f64;
        let t_max = self.cache.t_max();

        if gamma.k() == 0 {
            // mu_hat = n / (t_max + c); c = 0 for the MLE.
            let mu = (n / (t_max + kind.rate())).max(THETA_FLOOR);
            let theta = NodeParams {
                mu,
                alpha_active: vec![],
            };
            let nll = restricted.nll(&theta);
            return FitOutcome {
                theta,
                nll,
                converged: true,
            };
        }

        let dim = gamma.k() + 1;
        let rate = kind.rate();
        let objective = |eta: &[f64]| {
            let theta = NodeParams {
                mu: eta[0].exp().max(THETA_FLOOR),
                alpha_active: eta[1..].iter().map(|e| e.exp().max(THETA_FLOOR)).collect(),
            };
            // Keep the optimizer away from overflow territory.
            if theta.mu > 1e12 || theta.alpha_active.iter().any(|&a| a > 1e12) {
                return f64::INFINITY;
            }
            let mut f = restricted.nll(&theta);
            if rate > 0.0 {
                f += rate * (theta.mu + theta.alpha_active.iter().sum::<f64>());
            }
            f
        };

        let mut eta0 = vec![0.0; dim];
        eta0[0] = (n / t_max).max(1e-3).ln();
        for e in eta0[1..].iter_mut() {
            *e = 0.1_f64.ln();
        }
        let result = minimize(objective, &eta0, &self.optimizer);
        let theta = NodeParams {
            mu: result.x[0].exp().max(THETA_FLOOR),
            alpha_active: result.x[1..]
                .iter()
                .map(|e| e.exp().max(THETA_FLOOR))
                .collect(),
        };
        let nll = restricted.nll(&theta);
        FitOutcome {
            theta,
            nll,
            converged: result.converged,
        }
    }

    /// Full-model MLE as the thresholding baseline runs it: all `p + 1`
    /// parameters fitted simultaneously by one classic simplex run in the
    /// raw parameter space (negatives clamped), started at all-ones with
    /// the conventional 10% initial step and the conventional 500
    /// iteration budget, no restarts. Estimating everything at once this
    /// way degrades on short horizons as the dimension grows, which is
    /// the known weakness of the thresholded-MLE approach.
    pub fn fit_full_baseline(&self, p: usize) -> FitOutcome {
        let gamma = Structure::full(p);
        let restricted = self.cache.restrict(&gamma);
        let clamp = |raw: &[f64]| NodeParams {
            mu: raw[0].max(THETA_FLOOR),
            alpha_active: raw[1..].iter().map(|a| a.max(0.0)).collect(),
        };
        let objective = |raw: &[f64]| {
            if raw.iter().any(|&v| v > 1e12) {
                return f64::INFINITY;
            }
            restricted.nll(&clamp(raw))
        };
        let x0 = vec![1.0; p + 1];
        let cfg = NelderMeadConfig {
            max_iters: 500,
            restarts: 0,
            initial_step: 0.1,
            f_tol_abs: self.optimizer.f_tol_abs,
        };
        let result = minimize(objective, &x0, &cfg);
        let theta = clamp(&result.x);
        let nll = restricted.nll(&theta);
        FitOutcome {
            theta,
            nll,
            converged: result.converged,
        }
    }
}

/// Memo of fits keyed by (objective, structure); shared by criteria that
/// need the same fit, e.g. the uniform-prior message length and BIC.
#[derive(Debug, Default)]
pub struct FitMemo {
    fits: HashMap<(FitKind, u64), FitOutcome>,
}

impl FitMemo {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fit(&mut self, eval: &NodeEvaluator, gamma: &Structure, kind: FitKind) -> FitOutcome {
        self.fits
            .entry((kind, gamma.mask()))
            .or_insert_with(|| eval.fit(gamma, kind))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }
}

fn criterion_of(
    cfg_criterion: Criterion,
    prior: Option<&PriorSpec>,
    evaluator: &NodeEvaluator,
    gamma: &Structure,
    fit: &FitOutcome,
) -> Option<(f64, Option<CriterionValue>)> {
    if !fit.converged || !fit.nll.is_finite() {
        return None;
    }
    match cfg_criterion {
        Criterion::MmlU | Criterion::MmlE => {
            let prior = prior.expect("message-length criterion needs a prior");
            let v = mml_criterion(&fit.theta, gamma, prior, evaluator.cache())?;
            if v.total.is_nan() {
                return None;
            }
            // +inf stays evaluable (uniform prior box violation); it just
            // never wins the argmin.
            Some((v.total, Some(v)))
        }
        Criterion::Bic => Some((
            bic_criterion(fit.nll, gamma.k(), evaluator.cache().n_events()),
            None,
        )),
        Criterion::Aic => Some((aic_criterion(fit.nll, gamma.k()), None)),
        Criterion::MleMs => Some((fit.nll, None)),
        Criterion::MleThr | Criterion::Rand => {
            unreachable!("not enumeration criteria")
        }
    }
}

/// Exhaustive (optionally bounded) structure search for one node, reusing
/// fits from `memo`.
pub fn search_node_with(
    evaluator: &NodeEvaluator,
    memo: &mut FitMemo,
    node: usize,
    p: usize,
    cfg: &SearchConfig,
) -> Result<NodeSearchResult> {
    cfg.validate(p)?;
    let prior = cfg.resolved_prior()?;

    if evaluator.cache().n_events() == 0 {
        // No events, no information on incoming edges.
        let best = Structure::empty(p);
        let fits = if cfg.collect_fits {
            vec![NodeFit {
                structure: best.clone(),
                theta: None,
                value: f64::INFINITY,
                parts: None,
                status: FitStatus::Degenerate,
            }]
        } else {
            Vec::new()
        };
        return Ok(NodeSearchResult {
            node,
            best,
            best_value: f64::INFINITY,
            status: FitStatus::Degenerate,
            evaluated: 0,
            fits,
        });
    }

    let kind = FitKind::for_criterion(cfg.criterion, prior.as_ref());
    let mut best: Option<(f64, Structure)> = None;
    let mut empty_value: Option<f64> = None;
    let mut evaluated = 0usize;
    let mut fits = Vec::new();
    for gamma in Structure::enumerate(p, cfg.max_parents) {
        evaluated += 1;
        let fit = memo.fit(evaluator, &gamma, kind);
        let scored = criterion_of(cfg.criterion, prior.as_ref(), evaluator, &gamma, &fit);
        if cfg.collect_fits {
            fits.push(match &scored {
                Some((value, parts)) => NodeFit {
                    structure: gamma.clone(),
                    theta: Some(fit.theta.clone()),
                    value: *value,
                    parts: parts.clone(),
                    status: FitStatus::Ok,
                },
                None => NodeFit {
                    structure: gamma.clone(),
                    theta: None,
                    value: f64::INFINITY,
                    parts: None,
                    status: FitStatus::Failed,
                },
            });
        }
        if let Some((value, _)) = scored {
            if gamma.k() == 0 && !cfg.include_empty {
                // Kept out of the argmin but remembered as a fallback.
                empty_value = value.is_finite().then_some(value);
                continue;
            }
            // Strict improvement: ties keep the first structure in
            // enumeration order (fewest parents, lowest mask).
            let improves = match &best {
                Some((incumbent, _)) => value < *incumbent,
                None => value.is_finite(),
            };
            if improves && value.is_finite() {
                best = Some((value, gamma));
            }
        }
    }

    match (best, empty_value) {
        (Some((best_value, structure)), _) => Ok(NodeSearchResult {
            node,
            best: structure,
            best_value,
            status: FitStatus::Ok,
            evaluated,
            fits,
        }),
        (None, Some(value)) => Ok(NodeSearchResult {
            node,
            best: Structure::empty(p),
            best_value: value,
            status: FitStatus::Ok,
            evaluated,
            fits,
        }),
        (None, None) => Err(Error::Numerical(format!(
            "node {}: all {} structures failed evaluation",
            node + 1,
            evaluated
        ))),
    }
}

/// Convenience wrapper building the evaluator and a fresh memo.
pub fn search_node(
    data: &EventData,
    node: usize,
    beta_row: &[f64],
    cfg: &SearchConfig,
) -> Result<NodeSearchResult> {
    let evaluator = NodeEvaluator::new(data, node, beta_row, cfg.optimizer.clone())?;
    let mut memo = FitMemo::new();
    search_node_with(&evaluator, &mut memo, node, data.dims(), cfg)
}

/// One node of an inference run against a shared memo; dispatches between
/// the enumeration criteria and the full-fit threshold baseline. The
/// random baseline draws whole graphs and has no per-node search.
pub fn infer_node_with(
    evaluator: &NodeEvaluator,
    memo: &mut FitMemo,
    node: usize,
    p: usize,
    cfg: &SearchConfig,
) -> Result<NodeSearchResult> {
    match cfg.criterion {
        Criterion::Rand => Err(Error::Config("rand is not a per-node search".into())),
        Criterion::MleThr => thr_row(evaluator, node, p, cfg),
        _ => search_node_with(evaluator, memo, node, p, cfg),
    }
}

/// Full inference result: the graph plus per-node search diagnostics.
#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub graph: Graph,
    pub nodes: Vec<NodeSearchResult>,
}

impl InferenceResult {
    pub fn evaluated_total(&self) -> usize {
        self.nodes.iter().map(|n| n.evaluated).sum()
    }
}

fn thr_row(
    evaluator: &NodeEvaluator,
    node: usize,
    p: usize,
    cfg: &SearchConfig,
) -> Result<NodeSearchResult> {
    if evaluator.cache().n_events() == 0 {
        return Ok(NodeSearchResult {
            node,
            best: Structure::empty(p),
            best_value: f64::INFINITY,
            status: FitStatus::Degenerate,
            evaluated: 0,
            fits: Vec::new(),
        });
    }
    let fit = evaluator.fit_full_baseline(p);
    if !fit.nll.is_finite() {
        return Err(Error::Optimization(format!(
            "node {}: full-structure MLE diverged",
            node + 1
        )));
    }
    let gamma = Structure::new(mle_thr_rule(&fit.theta.alpha_active, cfg.threshold));
    Ok(NodeSearchResult {
        node,
        best: gamma,
        best_value: fit.nll,
        status: FitStatus::Ok,
        evaluated: 1,
        fits: Vec::new(),
    })
}

/// Random-baseline graph packaged as an inference result.
pub fn rand_graph_result(p: usize, seed: u64) -> InferenceResult {
    let graph = rand_rule(p, seed);
    let nodes = (0..p)
        .map(|i| NodeSearchResult {
            node: i,
            best: graph.row_structure(i),
            best_value: 0.0,
            status: FitStatus::Ok,
            evaluated: 0,
            fits: Vec::new(),
        })
        .collect();
    InferenceResult { graph, nodes }
}

/// Infer the full connectivity graph: one structure search per node, run
/// on a worker pool. Rows are independent, so the result does not depend
/// on the worker count.
pub fn infer_graph(
    data: &EventData,
    beta: &[Vec<f64>],
    cfg: &SearchConfig,
) -> Result<InferenceResult> {
    let p = data.dims();
    if beta.len() != p || beta.iter().any(|r| r.len() != p) {
        return Err(Error::DimensionMismatch(format!("beta must be {p}x{p}")));
    }
    cfg.validate(p)?;

    if cfg.criterion == Criterion::Rand {
        return Ok(rand_graph_result(p, cfg.seed));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let nodes: Result<Vec<NodeSearchResult>> = pool.install(|| {
        (0..p)
            .into_par_iter()
            .map(|i| {
                let evaluator = NodeEvaluator::new(data, i, &beta[i], cfg.optimizer.clone())
                    .map_err(|e| Error::Data(format!("node {}: {e}", i + 1)))?;
                let mut memo = FitMemo::new();
                if cfg.criterion == Criterion::MleThr {
                    thr_row(&evaluator, i, p, cfg)
                } else {
                    search_node_with(&evaluator, &mut memo, i, p, cfg)
                }
            })
            .collect()
    });
    let nodes = nodes?;
    let graph = Graph::from_structures(&nodes.iter().map(|n| n.best.clone()).collect::<Vec<_>>());
    Ok(InferenceResult { graph, nodes })
}
