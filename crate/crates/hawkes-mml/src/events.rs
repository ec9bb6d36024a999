//! Core data types: event sequences, model parameters, structures, graphs.
//!
//! An event set holds, for each of `p` nodes, a strictly increasing vector of
//! event times in `(0, T]`. A model is a baseline vector `mu`, an influence
//! matrix `alpha` and a decay matrix `beta`; the conditional intensity of
//! node `i` is
//!
//! ```text
//! lambda_i(t) = mu_i + sum_j alpha_ij * sum_{k: t_jk < t} exp(-beta_ij (t - t_jk))
//! ```
//!
//! Events strictly before `t` excite; an event does not excite at its own
//! instant. All types are immutable after construction.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Validated multivariate event data on a horizon `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventData {
    per_node: Vec<Vec<f64>>,
    horizon: f64,
}

impl EventData {
    /// Validate raw per-node time vectors: strictly increasing within each
    /// node (duplicates rejected), all times in `(0, T]`.
    pub fn new(per_node: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::OutOfRange(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if per_node.is_empty() {
            return Err(Error::InvalidEvents("need at least one node".into()));
        }
        for (i, times) in per_node.iter().enumerate() {
            let mut prev = 0.0_f64;
            for (l, &t) in times.iter().enumerate() {
                if !t.is_finite() || t <= 0.0 || t > horizon {
                    return Err(Error::InvalidEvents(format!(
                        "node {} event {} at t={} outside (0, {}]",
                        i + 1,
                        l + 1,
                        t,
                        horizon
                    )));
                }
                if l > 0 {
                    if t == prev {
                        return Err(Error::InvalidEvents(format!(
                            "node {} has duplicate timestamp {}",
                            i + 1,
                            t
                        )));
                    }
                    if t < prev {
                        return Err(Error::InvalidEvents(format!(
                            "node {} times not increasing at event {} ({} < {})",
                            i + 1,
                            l + 1,
                            t,
                            prev
                        )));
                    }
                }
                prev = t;
            }
        }
        Ok(Self { per_node, horizon })
    }

    pub fn dims(&self) -> usize {
        self.per_node.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.per_node[i]
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.per_node
    }

    pub fn count(&self, i: usize) -> usize {
        self.per_node[i].len()
    }

    pub fn total_events(&self) -> usize {
        self.per_node.iter().map(|v| v.len()).sum()
    }

    /// Largest jump time over all nodes. `None` when no node has events;
    /// operations that integrate up to `t_max` must reject that case.
    pub fn t_max(&self) -> Option<f64> {
        self.per_node
            .iter()
            .filter_map(|v| v.last().copied())
            .fold(None, |acc, t| Some(acc.map_or(t, |a: f64| a.max(t))))
    }

    /// Write the events CSV (`node_id,time`, 1-based node ids) sorted by
    /// time with node id as tie-break, so output bytes are deterministic.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut rows: Vec<(usize, f64)> = Vec::with_capacity(self.total_events());
        for (i, times) in self.per_node.iter().enumerate() {
            rows.extend(times.iter().map(|&t| (i + 1, t)));
        }
        rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        writeln!(w, "node_id,time")?;
        for (id, t) in rows {
            writeln!(w, "{id},{t}")?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Read an events CSV produced by [`write_csv`](Self::write_csv). The
    /// horizon is not stored in the file and must be supplied. `dims`
    /// widens the node count when the tail nodes have no events.
    pub fn read_csv<R: std::io::Read>(r: R, horizon: f64, dims: Option<usize>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut per_node: Vec<Vec<f64>> = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Data(format!(
                    "events row {}: expected 2 columns, got {}",
                    row + 2,
                    rec.len()
                )));
            }
            let id: usize = rec[0].trim().parse().map_err(|_| {
                Error::Data(format!("events row {}: bad node_id {:?}", row + 2, &rec[0]))
            })?;
            let t: f64 = rec[1].trim().parse().map_err(|_| {
                Error::Data(format!("events row {}: bad time {:?}", row + 2, &rec[1]))
            })?;
            if id == 0 {
                return Err(Error::Data(format!(
                    "events row {}: node_id is 1-based",
                    row + 2
                )));
            }
            if per_node.len() < id {
                per_node.resize(id, Vec::new());
            }
            per_node[id - 1].push(t);
        }
        if let Some(p) = dims {
            if per_node.len() > p {
                return Err(Error::Data(format!(
                    "events reference node {} but dims={}",
                    per_node.len(),
                    p
                )));
            }
            per_node.resize(p, Vec::new());
        }
        Self::new(per_node, horizon)
    }

    pub fn read_csv_file<P: AsRef<Path>>(
        path: P,
        horizon: f64,
        dims: Option<usize>,
    ) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f), horizon, dims)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModel {
    mu: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
}

/// Exponential-kernel multivariate Hawkes model parameters.
///
/// `mu_i > 0`, `alpha_ij >= 0`, `beta_ij > 0`. Row `i` of `alpha` holds the
/// influences *onto* node `i`. A spectral radius of `alpha_ij / beta_ij`
/// at or above one marks the model unstable; this is a warning flag, not a
/// construction error, since finite-horizon simulation remains well defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct HawkesModel {
    mu: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<f64>>,
    spectral_radius: f64,
}

impl TryFrom<RawModel> for HawkesModel {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        HawkesModel::new(raw.mu, raw.alpha, raw.beta)
    }
}

impl From<HawkesModel> for RawModel {
    fn from(m: HawkesModel) -> Self {
        RawModel {
            mu: m.mu,
            alpha: m.alpha,
            beta: m.beta,
        }
    }
}

impl HawkesModel {
    pub fn new(mu: Vec<f64>, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        let p = mu.len();
        if p == 0 {
            return Err(Error::DimensionMismatch("empty model".into()));
        }
        if alpha.len() != p
            || beta.len() != p
            || alpha.iter().any(|r| r.len() != p)
            || beta.iter().any(|r| r.len() != p)
        {
            return Err(Error::DimensionMismatch(format!(
                "mu has {} entries but alpha/beta are not {}x{}",
                p, p, p
            )));
        }
        for (i, &m) in mu.iter().enumerate() {
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::OutOfRange(format!(
                    "mu[{}]={} must be > 0",
                    i + 1,
                    m
                )));
            }
        }
        for i in 0..p {
            for j in 0..p {
                if !(alpha[i][j] >= 0.0) || !alpha[i][j].is_finite() {
                    return Err(Error::OutOfRange(format!(
                        "alpha[{}][{}]={} must be >= 0",
                        i + 1,
                        j + 1,
                        alpha[i][j]
                    )));
                }
                if !(beta[i][j] > 0.0) || !beta[i][j].is_finite() {
                    return Err(Error::OutOfRange(format!(
                        "beta[{}][{}]={} must be > 0",
                        i + 1,
                        j + 1,
                        beta[i][j]
                    )));
                }
            }
        }
        let spectral_radius = spectral_radius_ratio(&alpha, &beta);
        Ok(Self {
            mu,
            alpha,
            beta,
            spectral_radius,
        })
    }

    /// Constant model with all couplings zero (homogeneous Poisson).
    pub fn poisson(mu: Vec<f64>) -> Result<Self> {
        let p = mu.len();
        Self::new(mu, vec![vec![0.0; p]; p], vec![vec![1.0; p]; p])
    }

    pub fn dims(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn alpha(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    pub fn alpha_row(&self, i: usize) -> &[f64] {
        &self.alpha[i]
    }

    pub fn beta_row(&self, i: usize) -> &[f64] {
        &self.beta[i]
    }

    /// Spectral radius of the branching matrix `alpha_ij / beta_ij`.
    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_radius < 1.0
    }

    pub fn to_json_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn from_json_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }
}

/// Power iteration for the Perron root of the non-negative matrix
/// `alpha_ij / beta_ij`. Plenty accurate for a stability flag.
fn spectral_radius_ratio(alpha: &[Vec<f64>], beta: &[Vec<f64>]) -> f64 {
    let p = alpha.len();
    let mut x = vec![1.0_f64; p];
    let mut radius = 0.0;
    for _ in 0..200 {
        let mut y = vec![0.0_f64; p];
        for i in 0..p {
            let mut acc = 0.0;
            for j in 0..p {
                acc += alpha[i][j] / beta[i][j] * x[j];
            }
            y[i] = acc;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            return 0.0;
        }
        radius = norm / x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut y {
            *v /= norm;
        }
        x = y;
    }
    radius
}

/// Conditional intensity of node `i` at time `t` under the full model.
///
/// Only events strictly before `t` contribute.
pub fn intensity(model: &HawkesModel, data: &EventData, node: usize, t: f64) -> Result<f64> {
    let p = model.dims();
    if data.dims() != p {
        return Err(Error::DimensionMismatch(format!(
            "model has {} nodes, data has {}",
            p,
            data.dims()
        )));
    }
    if node >= p {
        return Err(Error::OutOfRange(format!(
            "node index {} out of 0..{}",
            node, p
        )));
    }
    if !(0.0..=data.horizon()).contains(&t) {
        return Err(Error::OutOfRange(format!(
            "t={} outside [0, {}]",
            t,
            data.horizon()
        )));
    }
    let mut lambda = model.mu[node];
    for j in 0..p {
        let a = model.alpha[node][j];
        if a == 0.0 {
            continue;
        }
        let b = model.beta[node][j];
        let mut acc = 0.0;
        for &tk in data.node(j) {
            if tk >= t {
                break;
            }
            acc += (-b * (t - tk)).exp();
        }
        lambda += a * acc;
    }
    Ok(lambda)
}

/// Binary parent-inclusion vector for one node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Structure {
    gamma: Vec<bool>,
}

impl Structure {
    pub fn new(gamma: Vec<bool>) -> Self {
        Self { gamma }
    }

    pub fn empty(p: usize) -> Self {
        Self {
            gamma: vec![false; p],
        }
    }

    pub fn full(p: usize) -> Self {
        Self {
            gamma: vec![true; p],
        }
    }

    /// Build from a bitmask where bit `j` is parent `j` (0-based).
    pub fn from_mask(p: usize, mask: u64) -> Self {
        Self {
            gamma: (0..p).map(|j| mask >> j & 1 == 1).collect(),
        }
    }

    pub fn mask(&self) -> u64 {
        self.gamma
            .iter()
            .enumerate()
            .fold(0u64, |m, (j, &g)| if g { m | 1 << j } else { m })
    }

    pub fn dims(&self) -> usize {
        self.gamma.len()
    }

    /// Number of included parents.
    pub fn k(&self) -> usize {
        self.gamma.iter().filter(|&&g| g).count()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.gamma[j]
    }

    pub fn gamma(&self) -> &[bool] {
        &self.gamma
    }

    /// Indices of included parents, ascending.
    pub fn active(&self) -> Vec<usize> {
        self.gamma
            .iter()
            .enumerate()
            .filter_map(|(j, &g)| g.then_some(j))
            .collect()
    }

    /// Enumerate all structures over `p` candidates with at most
    /// `max_parents` ones, ordered by parent count then ascending bitmask.
    /// The search's deterministic tie-break is "first enumerated wins", so
    /// this order is part of the contract.
    pub fn enumerate(p: usize, max_parents: Option<usize>) -> StructureIter {
        assert!(p > 0 && p <= 63, "dimension must be in 1..=63");
        let m = max_parents.unwrap_or(p).min(p);
        StructureIter {
            p,
            max_k: m,
            k: 0,
            mask: 0,
            done: false,
        }
    }

    /// Render as the bit string `gamma_1 .. gamma_p`, e.g. `"0101"`.
    pub fn bit_string(&self) -> String {
        self.gamma
            .iter()
            .map(|&g| if g { '1' } else { '0' })
            .collect()
    }
}

pub struct StructureIter {
    p: usize,
    max_k: usize,
    k: usize,
    mask: u64,
    done: bool,
}

impl StructureIter {
    fn advance(&mut self) {
        // Next mask with the same popcount (Gosper's hack), else move to
        // the smallest mask of the next popcount class.
        if self.k > 0 {
            let v = self.mask;
            let c = v & v.wrapping_neg();
            let r = v + c;
            let next = (((r ^ v) >> 2) / c) | r;
            if next < 1u64 << self.p {
                self.mask = next;
                return;
            }
        }
        self.k += 1;
        if self.k > self.max_k {
            self.done = true;
            return;
        }
        self.mask = (1u64 << self.k) - 1;
    }
}

impl Iterator for StructureIter {
    type Item = Structure;

    fn next(&mut self) -> Option<Structure> {
        if self.done {
            return None;
        }
        let out = Structure::from_mask(self.p, self.mask);
        self.advance();
        Some(out)
    }
}

/// MAP/MLE parameters of one node under a fixed structure: the baseline
/// `mu_i` followed by the active influences, aligned with
/// [`Structure::active`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeParams {
    pub mu: f64,
    pub alpha_active: Vec<f64>,
}

impl NodeParams {
    pub fn new(mu: f64, alpha_active: Vec<f64>) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::OutOfRange(format!("mu={mu} must be > 0")));
        }
        if alpha_active.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(Error::OutOfRange("alpha entries must be >= 0".into()));
        }
        Ok(Self { mu, alpha_active })
    }

    /// Total parameter count `k + 1`.
    pub fn len(&self) -> usize {
        1 + self.alpha_active.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat view `[mu, alpha_1, .., alpha_k]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.mu);
        v.extend_from_slice(&self.alpha_active);
        v
    }

    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        let (&mu, rest) = theta
            .split_first()
            .ok_or_else(|| Error::DimensionMismatch("empty parameter vector".into()))?;
        Self::new(mu, rest.to_vec())
    }
}

/// Binary adjacency estimate; entry `(i, j) = 1` means node `j`
/// Granger-causes node `i` (row `i` lists the parents of node `i`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    adjacency: Vec<Vec<u8>>,
}

impl Graph {
    pub fn empty(p: usize) -> Self {
        Self {
            adjacency: vec![vec![0; p]; p],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let p = rows.len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("adjacency must be square".into()));
        }
        if rows.iter().flatten().any(|&v| v > 1) {
            return Err(Error::Data("adjacency entries must be 0 or 1".into()));
        }
        Ok(Self { adjacency: rows })
    }

    pub fn from_structures(rows: &[Structure]) -> Self {
        Self {
            adjacency: rows
                .iter()
                .map(|s| s.gamma().iter().map(|&g| g as u8).collect())
                .collect(),
        }
    }

    pub fn dims(&self) -> usize {
        self.adjacency.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.adjacency[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u8) {
        self.adjacency[i][j] = if v > 0 { 1 } else { 0 };
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.adjacency
    }

    pub fn row_structure(&self, i: usize) -> Structure {
        Structure::new(self.adjacency[i].iter().map(|&v| v == 1).collect())
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().flatten().filter(|&&v| v == 1).count()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_json_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")?;
        Ok(())
    }

    pub fn from_json_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let g: Graph =
            serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        Graph::from_rows(g.adjacency)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn validate_accepts_well_formed() {
        let d = EventData::new(vec![vec![0.5, 1.2]], 2.0).unwrap();
        assert_eq!(d.count(0), 2);
        assert_eq!(d.t_max(), Some(1.2));
    }

    #[test]
    fn validate_rejects_non_monotone() {
        let err = EventData::new(vec![vec![1.2, 0.5]], 2.0).unwrap_err();
        assert!(matches!(err, Error::InvalidEvents(_)), "{err}");
    }

    #[test]
    fn validate_rejects_out_of_range() {
        assert!(EventData::new(vec![vec![0.5, 2.5]], 2.0).is_err());
        assert!(EventData::new(vec![vec![0.0]], 2.0).is_err());
    }

    #[test]
    fn validate_rejects_duplicates_within_node() {
        assert!(EventData::new(vec![vec![0.5, 0.5]], 2.0).is_err());
        // Simultaneous events on different nodes are fine.
        assert!(EventData::new(vec![vec![0.5], vec![0.5]], 2.0).is_ok());
    }

    #[test]
    fn t_max_undefined_when_empty() {
        let d = EventData::new(vec![vec![], vec![]], 1.0).unwrap();
        assert_eq!(d.t_max(), None);
    }

    #[test]
    fn intensity_poisson_is_baseline() {
        let model = HawkesModel::poisson(vec![0.5]).unwrap();
        let data = EventData::new(vec![vec![1.0, 2.0]], 10.0).unwrap();
        for t in [0.0, 0.3, 5.0, 10.0] {
            assert_relative_eq!(intensity(&model, &data, 0, t).unwrap(), 0.5);
        }
    }

    #[test]
    fn intensity_single_term() {
        let model = HawkesModel::new(vec![0.5], vec![vec![0.55]], vec![vec![1.0]]).unwrap();
        let data = EventData::new(vec![vec![1.0]], 10.0).unwrap();
        let got = intensity(&model, &data, 0, 2.0).unwrap();
        assert_relative_eq!(got, 0.5 + 0.55 * (-1.0_f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn intensity_matches_brute_force() {
        // Independent oracle: plain double loop over all (j, k) pairs.
        let mu = vec![0.4, 0.9];
        let alpha = vec![vec![0.3, 0.2], vec![0.0, 0.5]];
        let beta = vec![vec![1.0, 2.0], vec![0.7, 1.3]];
        let model = HawkesModel::new(mu.clone(), alpha.clone(), beta.clone()).unwrap();
        let data = EventData::new(
            vec![vec![0.2, 0.9, 2.4, 3.3], vec![0.5, 1.1, 1.7, 2.9, 4.0]],
            5.0,
        )
        .unwrap();
        for i in 0..2 {
            for t in [0.1, 0.9, 1.05, 2.35, 4.99] {
                let mut want = mu[i];
                for j in 0..2 {
                    for &tk in data.node(j) {
                        if tk < t {
                            want += alpha[i][j] * (-beta[i][j] * (t - tk)).exp();
                        }
                    }
                }
                let got = intensity(&model, &data, i, t).unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn intensity_excludes_event_at_its_own_instant() {
        let model = HawkesModel::new(vec![0.5], vec![vec![0.55]], vec![vec![1.0]]).unwrap();
        let data = EventData::new(vec![vec![1.0]], 10.0).unwrap();
        // At exactly t = 1.0 the event does not excite yet.
        assert_relative_eq!(intensity(&model, &data, 0, 1.0).unwrap(), 0.5);
        // Just after, the intensity has jumped by ~alpha.
        let after = intensity(&model, &data, 0, 1.0 + 1e-12).unwrap();
        assert_relative_eq!(after, 0.5 + 0.55, epsilon = 1e-9);
    }

    #[test]
    fn intensity_at_least_baseline_and_decreasing_between_events() {
        let model = HawkesModel::new(
            vec![0.5, 0.5],
            vec![vec![0.0, 0.6]; 2],
            vec![vec![1.0; 2]; 2],
        )
        .unwrap();
        let data = EventData::new(vec![vec![2.0], vec![1.0, 3.0]], 6.0).unwrap();
        let mut prev = f64::INFINITY;
        // No parent events in (1.0, 3.0); intensity must not increase there.
        for step in 0..50 {
            let t = 1.0 + 1e-9 + step as f64 * (2.0 - 2e-9) / 49.0;
            let v = intensity(&model, &data, 0, t).unwrap();
            assert!(v >= 0.5);
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn intensity_errors() {
        let model = HawkesModel::poisson(vec![0.5]).unwrap();
        let data2 = EventData::new(vec![vec![1.0], vec![]], 10.0).unwrap();
        assert!(intensity(&model, &data2, 0, 1.0).is_err());
        let data1 = EventData::new(vec![vec![1.0]], 10.0).unwrap();
        assert!(intensity(&model, &data1, 0, 10.5).is_err());
        assert!(intensity(&model, &data1, 0, -0.1).is_err());
    }

    #[test]
    fn model_validation_and_stability() {
        assert!(HawkesModel::new(vec![0.0], vec![vec![0.0]], vec![vec![1.0]]).is_err());
        assert!(HawkesModel::new(vec![0.5], vec![vec![-0.1]], vec![vec![1.0]]).is_err());
        assert!(HawkesModel::new(vec![0.5], vec![vec![0.1]], vec![vec![0.0]]).is_err());

        let stable = HawkesModel::new(vec![0.5], vec![vec![0.55]], vec![vec![1.0]]).unwrap();
        assert!(stable.is_stable());
        assert_relative_eq!(stable.spectral_radius(), 0.55, max_relative = 1e-6);

        let unstable = HawkesModel::new(vec![0.5], vec![vec![1.2]], vec![vec![1.0]]).unwrap();
        assert!(!unstable.is_stable());
    }

    #[test]
    fn cascade_spectral_radius_is_self_loop() {
        // Triangular branching matrix: eigenvalues are the diagonal.
        let p = 4;
        let mut alpha = vec![vec![0.0; p]; p];
        alpha[0][0] = 0.55;
        for i in 0..p - 1 {
            alpha[i + 1][i] = 0.55;
        }
        let model = HawkesModel::new(vec![0.5; p], alpha, vec![vec![1.0; p]; p]).unwrap();
        assert_relative_eq!(model.spectral_radius(), 0.55, max_relative = 1e-4);
    }

    #[test]
    fn events_csv_round_trip() {
        let d = EventData::new(vec![vec![0.25, 1.5], vec![0.5], vec![]], 2.0).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = EventData::read_csv(&buf[..], 2.0, Some(3)).unwrap();
        assert_eq!(d, back);
    }

    proptest::proptest! {
        /// CSV round trip is the identity for arbitrary valid event sets.
        #[test]
        fn events_csv_round_trip_holds(
            deltas in proptest::collection::vec(
                proptest::collection::vec(1e-6f64..1.0, 0..20),
                1..4,
            )
        ) {
            let horizon = 25.0;
            let per_node: Vec<Vec<f64>> = deltas
                .into_iter()
                .map(|ds| {
                    let mut t = 0.0;
                    ds.into_iter()
                        .map(|d| {
                            t += d;
                            t
                        })
                        .filter(|&t| t <= horizon)
                        .collect()
                })
                .collect();
            let dims = per_node.len();
            let d = EventData::new(per_node, horizon).unwrap();
            let mut buf = Vec::new();
            d.write_csv(&mut buf).unwrap();
            let back = EventData::read_csv(&buf[..], horizon, Some(dims)).unwrap();
            proptest::prop_assert_eq!(d, back);
        }
    }

    #[test]
    fn model_json_round_trip() {
        let m = HawkesModel::new(
            vec![0.5, 0.7],
            vec![vec![0.1, 0.0], vec![0.55, 0.2]],
            vec![vec![1.0, 2.0], vec![1.5, 1.0]],
        )
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        let back: HawkesModel = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        // Deserialization re-validates.
        let bad = r#"{"mu":[0.0],"alpha":[[0.0]],"beta":[[1.0]]}"#;
        assert!(serde_json::from_str::<HawkesModel>(bad).is_err());
    }

    #[test]
    fn structure_enumeration_order_and_counts() {
        let all: Vec<Structure> = Structure::enumerate(3, None).collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].mask(), 0);
        // k ascending, mask ascending within k.
        let masks: Vec<u64> = all.iter().map(|s| s.mask()).collect();
        assert_eq!(masks, vec![0, 1, 2, 4, 3, 5, 6, 7]);

        let bounded: Vec<Structure> = Structure::enumerate(10, Some(5)).collect();
        assert_eq!(bounded.len(), 638);
        let bounded3: Vec<Structure> = Structure::enumerate(20, Some(3)).collect();
        assert_eq!(bounded3.len(), 1351);
    }

    #[test]
    fn structure_round_trips_mask_and_active() {
        let s = Structure::from_mask(5, 0b10110);
        assert_eq!(s.k(), 3);
        assert_eq!(s.active(), vec![1, 2, 4]);
        assert_eq!(s.mask(), 0b10110);
        assert_eq!(s.bit_string(), "01101");
    }

    #[test]
    fn graph_json_round_trip() {
        let g = Graph::from_rows(vec![vec![1, 0], vec![1, 1]]).unwrap();
        let s = g.to_json_string().unwrap();
        let back: Graph = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        assert_eq!(g.edge_count(), 3);
        assert!(Graph::from_rows(vec![vec![1, 0]]).is_err());
        assert!(Graph::from_rows(vec![vec![2, 0], vec![0, 0]]).is_err());
    }
}
