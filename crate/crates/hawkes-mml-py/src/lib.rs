//! Python bindings: the simulator, graph inference, scoring, intensity
//! evaluation and the time-series ingester, all over plain lists.
//!
//! Node indices are 0-based; an adjacency entry `adj[i][j] == 1` means
//! node `j` Granger-causes node `i`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use hawkes_mml::criteria::Criterion;
use hawkes_mml::error::Error;
use hawkes_mml::events::{EventData, Graph, HawkesModel};
use hawkes_mml::ingest::{extract_events as extract, IngestConfig, SeriesTable};
use hawkes_mml::priors::PriorSpec;
use hawkes_mml::search::{infer_graph as infer, SearchConfig};
use hawkes_mml::simulate::{simulate as run_sim, SimConfig};

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Optimization(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn model_from_parts(
    mu: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
) -> PyResult<HawkesModel> {
    HawkesModel::new(mu, alpha, beta).map_err(to_py_err)
}

/// Sample one path of the process on [0, horizon]; returns per-node event
/// time lists. Deterministic for a fixed seed.
#[pyfunction]
#[pyo3(signature = (mu, alpha, beta, horizon, seed, max_events=10_000_000))]
fn simulate(
    mu: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    horizon: f64,
    seed: u64,
    max_events: usize,
) -> PyResult<Vec<Vec<f64>>> {
    let model = model_from_parts(mu, alpha, beta)?;
    let data = run_sim(&SimConfig {
        model,
        horizon,
        seed,
        max_events,
    })
    .map_err(to_py_err)?;
    Ok(data.nodes().to_vec())
}

/// Conditional intensity of `node` at time `t` given the events.
#[pyfunction]
fn intensity(
    mu: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    events: Vec<Vec<f64>>,
    horizon: f64,
    node: usize,
    t: f64,
) -> PyResult<f64> {
    let model = model_from_parts(mu, alpha, beta)?;
    let data = EventData::new(events, horizon).map_err(to_py_err)?;
    hawkes_mml::events::intensity(&model, &data, node, t).map_err(to_py_err)
}

/// Infer the connectivity graph; returns the 0/1 adjacency matrix.
///
/// `criterion` is one of mml-u, mml-e, bic, aic, mle-ms, mle-thr, rand.
/// `beta` is the known decay constant applied to every pair unless a full
/// `beta_matrix` is given.
#[pyfunction]
#[pyo3(signature = (
    events, horizon, criterion, beta=1.0, beta_matrix=None, prior_b=None, prior_c=None,
    max_parents=None, workers=0, seed=0, threshold=0.1, include_empty=false
))]
#[allow(clippy::too_many_arguments)]
fn infer_graph(
    events: Vec<Vec<f64>>,
    horizon: f64,
    criterion: &str,
    beta: f64,
    beta_matrix: Option<Vec<Vec<f64>>>,
    prior_b: Option<f64>,
    prior_c: Option<f64>,
    max_parents: Option<usize>,
    workers: usize,
    seed: u64,
    threshold: f64,
    include_empty: bool,
) -> PyResult<Vec<Vec<u32>>> {
    let data = EventData::new(events, horizon).map_err(to_py_err)?;
    let p = data.dims();
    let criterion = Criterion::parse(criterion).map_err(to_py_err)?;
    let prior = match criterion {
        Criterion::MmlU => Some(match prior_b {
            Some(b) => PriorSpec::uniform(b).map_err(to_py_err)?,
            None => PriorSpec::sparse_uniform(),
        }),
        Criterion::MmlE => Some(match prior_c {
            Some(c) => PriorSpec::exponential(c).map_err(to_py_err)?,
            None => PriorSpec::sparse_exponential(),
        }),
        _ => None,
    };
    let beta = match beta_matrix {
        Some(m) => m,
        None => vec![vec![beta; p]; p],
    };
    let cfg = SearchConfig {
        criterion,
        prior,
        max_parents,
        optimizer: Default::default(),
        workers,
        seed,
        threshold,
        include_empty,
        collect_fits: false,
    };
    let result = infer(&data, &beta, &cfg).map_err(to_py_err)?;
    // Rows as plain int lists (a bare Vec<u8> would surface as bytes).
    Ok(result
        .graph
        .rows()
        .iter()
        .map(|row| row.iter().map(|&v| v as u32).collect())
        .collect())
}

/// Precision/recall/F1 of a predicted adjacency against a truth.
#[pyfunction]
fn score(
    py: Python<'_>,
    predicted: Vec<Vec<u8>>,
    truth: Vec<Vec<u8>>,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let predicted = Graph::from_rows(predicted).map_err(to_py_err)?;
    let truth = Graph::from_rows(truth).map_err(to_py_err)?;
    let report = hawkes_mml::metrics::score(&predicted, &truth).map_err(to_py_err)?;
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("precision", report.precision)?;
    dict.set_item("recall", report.recall)?;
    dict.set_item("f1", report.f1)?;
    dict.set_item("tp_count", report.tp_count)?;
    dict.set_item("predicted_count", report.predicted_count)?;
    dict.set_item("truth_count", report.truth_count)?;
    Ok(dict.unbind())
}

/// Rolling top-quantile shock extraction: turns real-valued series (one
/// list per node) into event-time lists on (0, horizon]. Returns
/// `(events, counts)`.
#[pyfunction]
#[pyo3(signature = (columns, window, quantile=0.2, horizon=400.0))]
fn extract_events(
    columns: Vec<Vec<f64>>,
    window: usize,
    quantile: f64,
    horizon: f64,
) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
    if columns.is_empty() {
        return Err(PyValueError::new_err("need at least one series"));
    }
    let len = columns[0].len();
    if columns.iter().any(|c| c.len() != len) {
        return Err(PyValueError::new_err("series must have equal length"));
    }
    let table = SeriesTable {
        timestamps: (0..len).map(|i| i.to_string()).collect(),
        names: (0..columns.len()).map(|c| format!("series_{c}")).collect(),
        columns,
    };
    let cfg = IngestConfig {
        window,
        quantile,
        horizon,
    };
    let (data, report) = extract(&table, &cfg).map_err(to_py_err)?;
    Ok((data.nodes().to_vec(), report.counts))
}

#[pymodule]
fn hawkes_mml_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(intensity, m)?)?;
    m.add_function(wrap_pyfunction!(infer_graph, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(extract_events, m)?)?;
    Ok(())
}
