//! Per-node negative log-likelihood, gradient and Hessian for the
//! exponential-kernel model, restricted to a parent structure.
//!
//! For a target node `i` with events `t_1 < .. < t_n` and parent `j`, the
//! weighted history
//!
//! ```text
//! A_j(t) = sum_{k: t_jk < t} exp(-beta_j (t - t_jk))
//! ```
//!
//! is computed once for every (target event, parent) pair by a
//! decay-and-accumulate sweep, after which every structure evaluation for
//! that node reuses the same cache. The likelihood integrates up to
//! `t_max`, the largest jump time over all nodes, not the nominal horizon.

use crate::error::{Error, Result};
use crate::events::{EventData, NodeParams, Structure};

/// Product chunk length for the log-intensity sum. Bounded so that chunk
/// products stay far from both overflow and underflow.
const LOG_CHUNK: usize = 8;

/// Precomputed history sums for one target node against all `p` parents.
#[derive(Debug, Clone)]
pub struct HistoryCache {
    node: usize,
    p: usize,
    n_events: usize,
    t_max: f64,
    /// `A_j(t_l)` stored row-major: `a[l * p + j]`.
    a: Vec<f64>,
    /// Per parent `j`: `sum_k (1 - exp(-beta_j (t_max - t_jk))) / beta_j`.
    terminal: Vec<f64>,
}

/// Build the cache for `node` given its decay row `beta_row` (length `p`).
///
/// Fails when the data set contains no events at all, since `t_max` is
/// undefined in that case.
pub fn build_cache(data: &EventData, node: usize, beta_row: &[f64]) -> Result<HistoryCache> {
    let p = data.dims();
    if beta_row.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "beta row has {} entries for {} nodes",
            beta_row.len(),
            p
        )));
    }
    if node >= p {
        return Err(Error::OutOfRange(format!("node {} out of 0..{}", node, p)));
    }
    let t_max = data
        .t_max()
        .ok_or_else(|| Error::InvalidEvents("no events in any node; t_max undefined".into()))?;

    let targets = data.node(node);
    let n_events = targets.len();
    let mut a = vec![0.0_f64; n_events * p];
    let mut terminal = vec![0.0_f64; p];

    for j in 0..p {
        let beta = beta_row[j];
        let sources = data.node(j);

        // Terminal compensator sum for this parent.
        let mut s = 0.0;
        for &tk in sources {
            s += 1.0 - (-beta * (t_max - tk)).exp();
        }
        terminal[j] = s / beta;

        // Decay-and-accumulate recursion over the merged event sweep:
        // A(t_l) = A(t_{l-1}) e^{-beta dt} + sum of kernels of source
        // events in [t_{l-1}, t_l). Source events exactly at a target time
        // are excluded there (strict inequality) and picked up later.
        let mut acc = 0.0_f64;
        let mut prev_t = 0.0_f64;
        let mut next_src = 0usize;
        for (l, &tl) in targets.iter().enumerate() {
            acc *= (-beta * (tl - prev_t)).exp();
            // Source events in [prev_t, tl) are new; one exactly at prev_t
            // was excluded there by the strict inequality and enters here.
            while next_src < sources.len() && sources[next_src] < tl {
                acc += (-beta * (tl - sources[next_src])).exp();
                next_src += 1;
            }
            a[l * p + j] = acc;
            prev_t = tl;
        }
    }

    Ok(HistoryCache {
        node,
        p,
        n_events,
        t_max,
        a,
        terminal,
    })
}

impl HistoryCache {
    pub fn node(&self) -> usize {
        self.node
    }

    pub fn dims(&self) -> usize {
        self.p
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `A_j(t_l)` for target event `l` and parent `j`.
    pub fn a_value(&self, l: usize, j: usize) -> f64 {
        self.a[l * self.p + j]
    }

    pub fn terminal_sum(&self, j: usize) -> f64 {
        self.terminal[j]
    }

    /// Gather the columns of one structure into a dense view, used by the
    /// optimizer so inner evaluations scan contiguous memory.
    pub fn restrict(&self, gamma: &Structure) -> RestrictedCache {
        assert_eq!(gamma.dims(), self.p, "structure dimension mismatch");
        let active = gamma.active();
        let k = active.len();
        let mut a = vec![0.0_f64; self.n_events * k];
        for l in 0..self.n_events {
            let row = &self.a[l * self.p..(l + 1) * self.p];
            for (c, &j) in active.iter().enumerate() {
                a[l * k + c] = row[j];
            }
        }
        let terminal = active.iter().map(|&j| self.terminal[j]).collect();
        RestrictedCache {
            n_events: self.n_events,
            k,
            t_max: self.t_max,
            a,
            terminal,
        }
    }

    /// Negative log-likelihood of the node under `gamma` at `theta`.
    pub fn nll(&self, theta: &NodeParams, gamma: &Structure) -> f64 {
        self.restrict(gamma).nll(theta)
    }

    /// Gradient `(d/d mu, d/d alpha_j ..)`, length `k + 1`.
    pub fn grad(&self, theta: &NodeParams, gamma: &Structure) -> Vec<f64> {
        self.restrict(gamma).grad(theta)
    }

    /// Hessian block of the node under `gamma` at `theta`; symmetric
    /// `(k+1) x (k+1)` with non-negative entries.
    pub fn hessian(&self, theta: &NodeParams, gamma: &Structure) -> SymMatrix {
        self.restrict(gamma).hessian(theta)
    }
}

/// Cache columns gathered for one structure.
#[derive(Debug, Clone)]
pub struct RestrictedCache {
    n_events: usize,
    k: usize,
    t_max: f64,
    /// `n_events x k`, row-major.
    a: Vec<f64>,
    terminal: Vec<f64>,
}

impl RestrictedCache {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    fn check(&self, theta: &NodeParams) {
        assert_eq!(
            theta.alpha_active.len(),
            self.k,
            "parameter vector does not match structure"
        );
    }

    /// Intensity at target event `l`: `mu + sum_j alpha_j A_j(t_l)`.
    #[inline]
    fn event_intensity(&self, theta: &NodeParams, l: usize) -> f64 {
        let row = &self.a[l * self.k..(l + 1) * self.k];
        let mut d = theta.mu;
        for (&aj, &alj) in theta.alpha_active.iter().zip(row) {
            d += aj * alj;
        }
        d
    }

    pub fn nll(&self, theta: &NodeParams) -> f64 {
        self.check(theta);
        let mut total = theta.mu * self.t_max;
        for (&aj, &sj) in theta.alpha_active.iter().zip(&self.terminal) {
            total += aj * sj;
        }
        // Log terms via fixed-size chunk products; order is fixed, so
        // repeated evaluations are bit-identical.
        let mut log_sum = 0.0_f64;
        let mut prod = 1.0_f64;
        let mut in_chunk = 0usize;
        for l in 0..self.n_events {
            prod *= self.event_intensity(theta, l);
            in_chunk += 1;
            if in_chunk == LOG_CHUNK {
                log_sum += prod.ln();
                prod = 1.0;
                in_chunk = 0;
            }
        }
        if in_chunk > 0 {
            log_sum += prod.ln();
        }
        total - log_sum
    }

    pub fn grad(&self, theta: &NodeParams) -> Vec<f64> {
        self.check(theta);
        let k = self.k;
        let mut g = vec![0.0_f64; k + 1];
        for l in 0..self.n_events {
            let inv = 1.0 / self.event_intensity(theta, l);
            g[0] -= inv;
            let row = &self.a[l * k..(l + 1) * k];
            for (gj, &alj) in g[1..].iter_mut().zip(row) {
                *gj -= alj * inv;
            }
        }
        g[0] += self.t_max;
        for (gj, &sj) in g[1..].iter_mut().zip(&self.terminal) {
            *gj += sj;
        }
        g
    }

    pub fn hessian(&self, theta: &NodeParams) -> SymMatrix {
        self.check(theta);
        let k = self.k;
        let dim = k + 1;
        let mut h = SymMatrix::zeros(dim);
        let mut v = vec![0.0_f64; dim];
        for l in 0..self.n_events {
            let d = self.event_intensity(theta, l);
            let w = 1.0 / (d * d);
            v[0] = 1.0;
            v[1..].copy_from_slice(&self.a[l * k..(l + 1) * k]);
            for r in 0..dim {
                let wr = w * v[r];
                for c in r..dim {
                    *h.at_mut(r, c) += wr * v[c];
                }
            }
        }
        // Mirror the upper triangle; symmetry is exact by construction.
        for r in 0..dim {
            for c in 0..r {
                *h.at_mut(r, c) = h.at(c, r);
            }
        }
        h
    }
}

/// Small dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim);
            for (c, &v) in row.iter().enumerate() {
                *m.at_mut(r, c) = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.dim + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Log-determinant via LU with partial pivoting.
///
/// Returns `None` when the determinant is non-positive, below `1e-300`, or
/// any intermediate is non-finite. Callers treat `None` as a
/// structure-evaluation failure, not a fatal error.
pub fn logdet_hessian(m: &SymMatrix) -> Option<f64> {
    let n = m.dim;
    if n == 0 {
        return Some(0.0);
    }
    let mut a = m.data.clone();
    let mut negative = false;
    let mut log_abs = 0.0_f64;
    for col in 0..n {
        let mut piv = col;
        let mut max = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > max {
                max = v;
                piv = r;
            }
        }
        if !(max > 0.0) || !max.is_finite() {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            negative = !negative;
        }
        let d = a[col * n + col];
        if d < 0.0 {
            negative = !negative;
        }
        log_abs += d.abs().ln();
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            for c in col + 1..n {
                a[r * n + c] -= f * a[col * n + c];
            }
        }
    }
    if negative || !log_abs.is_finite() || log_abs <= 1e-300_f64.ln() {
        return None;
    }
    Some(log_abs)
}
