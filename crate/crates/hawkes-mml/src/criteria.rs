//! Model-selection criteria evaluated per (node, structure) pair.
//!
//! The message-length criterion for a structure with `k` parents is
//!
//! ```text
//! total = nll(theta_hat) + neg_log_prior(theta_hat)
//!       + 0.5 log|H(theta_hat)|
//!       + lattice_terms(k) + structure_preamble(p, k)
//! ```
//!
//! with the quantizing-lattice approximation
//! `-(k/2) log(2 pi) + 0.5 log(k pi) + psi(1)` for `k >= 1` and `0` for an
//! unconnected node. BIC, AIC and plain NLL plug into the same search slot;
//! they are stated on the per-node NLL scale so all criteria share units
//! (nats), which leaves every per-node argmin unchanged.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::events::{Graph, NodeParams, Structure};
use crate::likelihood::{logdet_hessian, HistoryCache};
use crate::priors::PriorSpec;

/// digamma(1): negative Euler-Mascheroni constant.
pub const PSI_ONE: f64 = -0.577_215_664_901_532_9;

/// Default edge threshold of the full-MLE baseline.
pub const MLE_THR_DEFAULT: f64 = 0.1;

/// Selection rule names accepted on the command line.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Message length with uniform prior.
    #[value(name = "mml-u")]
    MmlU,
    /// Message length with exponential prior.
    #[value(name = "mml-e")]
    MmlE,
    #[value(name = "bic")]
    Bic,
    #[value(name = "aic")]
    Aic,
    /// Plain NLL model selection.
    #[value(name = "mle-ms")]
    MleMs,
    /// Full MLE fit, edges where alpha exceeds a threshold.
    #[value(name = "mle-thr")]
    MleThr,
    /// One random parent per node.
    #[value(name = "rand")]
    Rand,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::MmlU => "mml-u",
            Criterion::MmlE => "mml-e",
            Criterion::Bic => "bic",
            Criterion::Aic => "aic",
            Criterion::MleMs => "mle-ms",
            Criterion::MleThr => "mle-thr",
            Criterion::Rand => "rand",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mml-u" => Ok(Criterion::MmlU),
            "mml-e" => Ok(Criterion::MmlE),
            "bic" => Ok(Criterion::Bic),
            "aic" => Ok(Criterion::Aic),
            "mle-ms" => Ok(Criterion::MleMs),
            "mle-thr" => Ok(Criterion::MleThr),
            "rand" => Ok(Criterion::Rand),
            other => Err(Error::Config(format!("unknown criterion {other:?}"))),
        }
    }
}

/// Message length split into its summands; `total` is their sum in the
/// documented order fit + prior + complexity + lattice + preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionValue {
    pub total: f64,
    pub fit: f64,
    pub prior: f64,
    pub complexity: f64,
    pub lattice: f64,
    pub preamble: f64,
}

/// Code length of the structure choice: `log C(p, k) + log(p + 1)`.
pub fn structure_preamble(p: usize, k: usize) -> f64 {
    assert!(k <= p, "k={k} out of 0..={p}");
    ln_choose(p, k) + ((p + 1) as f64).ln()
}

fn ln_choose(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Quantizing-lattice terms `-(k/2) log(2 pi) + 1/2 log(k pi) + psi(1)`;
/// zero for `k = 0` (a node without input connections pays no lattice
/// cost).
pub fn lattice_terms(k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let kf = k as f64;
    -0.5 * kf * (2.0 * std::f64::consts::PI).ln() + 0.5 * (kf * std::f64::consts::PI).ln() + PSI_ONE
}

/// Lower and upper bounds on the lattice constant `kappa_k` for `k >= 2`:
///
/// ```text
/// Gamma(k/2+1)^(2/k) / (pi (k+2))  <  kappa_k  <
/// Gamma(k/2+1)^(2/k) Gamma(2/k+1) / (pi k)
/// ```
///
/// Both tend to `1/(2 pi e)` as `k` grows.
pub fn kappa_bounds(k: usize) -> (f64, f64) {
    assert!(k >= 2, "bounds are stated for k >= 2");
    let kf = k as f64;
    let common = (2.0 / kf * ln_gamma(kf / 2.0 + 1.0)).exp();
    let lower = common / (std::f64::consts::PI * (kf + 2.0));
    let upper = common * (ln_gamma(2.0 / kf + 1.0)).exp() / (std::f64::consts::PI * kf);
    (lower, upper)
}

/// Assemble the message-length criterion at the MAP `theta_hat`.
///
/// Returns `None` when the Hessian log-determinant fails (singular or
/// non-positive); the search skips such structures.
pub fn mml_criterion(
    theta_hat: &NodeParams,
    gamma: &Structure,
    prior: &PriorSpec,
    cache: &HistoryCache,
) -> Option<CriterionValue> {
    let k = gamma.k();
    let p = gamma.dims();
    let fit = cache.nll(theta_hat, gamma);
    if !fit.is_finite() {
        return None;
    }
    let prior_len = prior.neg_log_prior(theta_hat);
    let complexity = 0.5 * logdet_hessian(&cache.hessian(theta_hat, gamma))?;
    let lattice = lattice_terms(k);
    let preamble = structure_preamble(p, k);
    let total = fit + prior_len + complexity + lattice + preamble;
    Some(CriterionValue {
        total,
        fit,
        prior: prior_len,
        complexity,
        lattice,
        preamble,
    })
}

/// BIC on the per-node NLL scale: `nll + (k+1)/2 log n_i`, with `n_i` the
/// event count of the node.
pub fn bic_criterion(nll: f64, k: usize, n_events: usize) -> f64 {
    debug_assert!(n_events > 0, "BIC needs at least one event");
    nll + (k as f64 + 1.0) / 2.0 * (n_events as f64).ln()
}

/// AIC on the per-node NLL scale: `nll + (k+1)`.
pub fn aic_criterion(nll: f64, k: usize) -> f64 {
    nll + k as f64 + 1.0
}

/// Thresholding rule of the full-MLE baseline: an edge needs
/// `alpha_hat > threshold` (a value exactly at the threshold is no edge).
pub fn mle_thr_rule(alpha_hat_full: &[f64], threshold: f64) -> Vec<bool> {
    alpha_hat_full.iter().map(|&a| a > threshold).collect()
}

/// Random baseline: exactly one uniformly placed parent per row.
pub fn rand_rule(p: usize, seed: u64) -> Graph {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut g = Graph::empty(p);
    for i in 0..p {
        let j = rng.random_range(0..p);
        g.set(i, j, 1);
    }
    g
}
