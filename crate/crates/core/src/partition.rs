//! Community divisions and the marginalized degree-corrected SBM posterior.
//!
//! With `n_r` nodes and summed degree `kappa_r` in community `r`, and `m_rs`
//! edges between communities (`m_rr` counting internal edges once), the
//! unnormalized log posterior of a labeled division is
//!
//! ```text
//!   -k log n + sum_r log n_r!
//!   + sum_r   [kappa_r log n_r + log (n_r-1)! - log (n_r+kappa_r-1)!]
//!   + sum_r<s [log m_rs! - (m_rs+1) log(p n_r n_s + 1)]
//!   + sum_r   [log m_rr! - (m_rr+1) log(p n_r^2 / 2 + 1)]
//! ```
//!
//! The first line is the restaurant-process prior, the rest the likelihood
//! with the degree propensities and block rates integrated out. Constants that
//! do not depend on the division are dropped.

use std::collections::BTreeMap;

use statrs::function::factorial::ln_factorial as statrs_ln_factorial;

use crate::error::{Error, Result};
use crate::graph::Graph;

pub(crate) fn ln_factorial(x: u64) -> f64 {
    statrs_ln_factorial(x)
}

/// A division of nodes `0..n` into `k` nonempty communities labeled `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<u32>,
    k: usize,
}

impl Partition {
    /// Validates that `labels` uses exactly the labels `0..k` for some `k`.
    pub fn new(labels: Vec<u32>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPartition("no nodes".into()));
        }
        let k = *labels.iter().max().unwrap() as usize + 1;
        let mut used = vec![false; k];
        for &l in &labels {
            used[l as usize] = true;
        }
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(Error::InvalidPartition(format!("community {gap} is empty")));
        }
        Ok(Self { labels, k })
    }

    /// Relabels arbitrary integer labels into `0..k` in first-appearance order.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(raw: &[T]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidPartition("no nodes".into()));
        }
        let mut map = rustc_hash::FxHashMap::default();
        let labels = raw
            .iter()
            .map(|x| {
                let next = map.len() as u32;
                *map.entry(*x).or_insert(next)
            })
            .collect();
        Ok(Self {
            labels,
            k: map.len(),
        })
    }

    /// Every node in its own community.
    pub fn singletons(n: usize) -> Self {
        Self {
            labels: (0..n as u32).collect(),
            k: n,
        }
    }

    /// All nodes in one community.
    pub fn single(n: usize) -> Self {
        Self {
            labels: vec![0; n],
            k: 1,
        }
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<u32>, k: usize) -> Self {
        debug_assert!(Partition::new(labels.clone()).map(|p| p.k == k).unwrap_or(false));
        Self { labels, k }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn community_count(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.labels[node] as usize
    }

    pub fn sizes(&self) -> Vec<u64> {
        let mut sizes = vec![0u64; self.k];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// The same division relabeled in first-appearance order; two partitions
    /// describe the same set partition iff their canonical forms are equal.
    pub fn canonical(&self) -> Partition {
        Partition::from_labels(&self.labels).expect("nonempty")
    }

    pub fn same_division(&self, other: &Partition) -> bool {
        self.node_count() == other.node_count() && self.canonical() == other.canonical()
    }

    /// Members of each community, in node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(i);
        }
        out
    }
}

/// Sufficient statistics of a division: sizes, degree sums and edge counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStats {
    pub sizes: Vec<u64>,
    pub kappa: Vec<u64>,
    /// `m_rr`: edges with both ends in `r`, each counted once.
    pub internal: Vec<u64>,
    /// `m_rs` for `r < s`; absent pairs have no edges.
    pub between: BTreeMap<(usize, usize), u64>,
}

impl GroupStats {
    pub fn community_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn between(&self, r: usize, s: usize) -> u64 {
        let key = if r < s { (r, s) } else { (s, r) };
        self.between.get(&key).copied().unwrap_or(0)
    }
}

/// Counts `n_r`, `kappa_r` and `m_rs` with one pass over the edges.
pub fn compute_stats(graph: &Graph, partition: &Partition) -> Result<GroupStats> {
    if partition.node_count() != graph.node_count() {
        return Err(Error::SizeMismatch {
            expected: graph.node_count(),
            found: partition.node_count(),
        });
    }
    let k = partition.community_count();
    let mut stats = GroupStats {
        sizes: vec![0; k],
        kappa: vec![0; k],
        internal: vec![0; k],
        between: BTreeMap::new(),
    };
    for (i, &l) in partition.labels().iter().enumerate() {
        let r = l as usize;
        if r >= k {
            return Err(Error::InvalidPartition(format!("label {r} out of range")));
        }
        stats.sizes[r] += 1;
        stats.kappa[r] += graph.degree(i);
    }
    for (i, j, c) in graph.edges() {
        let r = partition.community_of(i);
        let s = partition.community_of(j);
        if r == s {
            stats.internal[r] += c;
        } else {
            *stats.between.entry((r.min(s), r.max(s))).or_insert(0) += c;
        }
    }
    Ok(stats)
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be positive and finite, got {p}")))
    }
}

/// Degree term of one community; zero for an empty community.
#[inline]
pub(crate) fn community_term(size: u64, kappa: u64, lnf: impl Fn(u64) -> f64) -> f64 {
    if size == 0 {
        return 0.0;
    }
    kappa as f64 * (size as f64).ln() + lnf(size - 1) - lnf(size + kappa - 1)
}

/// Log marginal likelihood of the graph given the division.
pub fn log_likelihood_marginal(stats: &GroupStats, p: f64) -> Result<f64> {
    check_p(p)?;
    let k = stats.community_count();
    let mut total = 0.0;
    for r in 0..k {
        let nr = stats.sizes[r] as f64;
        total += community_term(stats.sizes[r], stats.kappa[r], ln_factorial);
        let mrr = stats.internal[r];
        total += ln_factorial(mrr) - (mrr as f64 + 1.0) * (0.5 * p * nr * nr).ln_1p();
    }
    for r in 0..k {
        for s in r + 1..k {
            let mrs = stats.between(r, s);
            let lambda = p * stats.sizes[r] as f64 * stats.sizes[s] as f64;
            total += ln_factorial(mrs) - (mrs as f64 + 1.0) * lambda.ln_1p();
        }
    }
    Ok(total)
}

/// Restaurant-process prior `P(g, k) = n^{-k} prod_r n_r!`, in log form.
pub fn log_prior(partition: &Partition) -> f64 {
    let n = partition.node_count() as f64;
    let sizes = partition.sizes();
    -(partition.community_count() as f64) * n.ln() + sizes.iter().map(|&s| ln_factorial(s)).sum::<f64>()
}

/// Unnormalized log posterior of a labeled division.
///
/// The division is canonicalized first so that relabeled copies of the same
/// division produce bit-identical values.
pub fn log_posterior(graph: &Graph, partition: &Partition, p: f64) -> Result<f64> {
    let canonical = partition.canonical();
    let stats = compute_stats(graph, &canonical)?;
    Ok(log_prior(&canonical) + log_likelihood_marginal(&stats, p)?)
}
