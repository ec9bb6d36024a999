//! Granger-causal connectivity inference for exponential-kernel
//! multivariate Hawkes processes.
//!
//! The library estimates which nodes of a multivariate Hawkes process
//! drive which others: per node it enumerates candidate parent sets, fits
//! each by penalized maximum likelihood, and keeps the set minimizing a
//! message-length criterion (reference selectors based on BIC, AIC and
//! plain likelihood plug into the same search). A thinning-based
//! simulator, a scoring module, a benchmark harness and a
//! time-series-to-events ingester round out the toolkit; the `hawkes-mml`
//! binary wires everything into a CLI.

pub mod bench;
pub mod cli;
pub mod criteria;
pub mod error;
pub mod events;
pub mod ingest;
pub mod likelihood;
pub mod metrics;
pub mod optim;
pub mod priors;
pub mod search;
pub mod simulate;

pub use error::{Error, Result};
pub use events::{EventData, Graph, HawkesModel, NodeParams, Structure};
pub use metrics::{score, ScoreReport};
pub use priors::PriorSpec;
pub use search::{infer_graph, InferenceResult, SearchConfig};
pub use simulate::{simulate, SimConfig};
