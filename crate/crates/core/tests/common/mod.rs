//! Reference implementations used as test oracles. Deliberately naive:
//! dense adjacency, explicit loops, factorials as plain sums of logs.

#![allow(dead_code)]

use blockkit::graph::{Graph, GraphBuilder};

pub fn ln_fact(k: u64) -> f64 {
    (2..=k).map(|x| (x as f64).ln()).sum()
}

/// Graph from `(u, v)` pairs on nodes `0..n`; repeats are multi-edges, `u == v` a self-loop.
pub fn graph_from(n: usize, edges: &[(usize, usize)]) -> Graph {
    let mut b = GraphBuilder::new(n);
    for &(u, v) in edges {
        b.add_edge(u, v);
    }
    b.build()
}

/// Unnormalized log posterior from a dense adjacency matrix with `A_ii` equal
/// to twice the number of self-loops.
pub fn oracle_log_posterior(n: usize, edges: &[(usize, usize)], labels: &[u32], p: f64) -> f64 {
    let mut a = vec![vec![0u64; n]; n];
    for &(u, v) in edges {
        if u == v {
            a[u][u] += 2;
        } else {
            a[u][v] += 1;
            a[v][u] += 1;
        }
    }
    let k = *labels.iter().max().unwrap() as usize + 1;
    let mut size = vec![0u64; k];
    let mut kappa = vec![0u64; k];
    let mut m = vec![vec![0u64; k]; k];
    for i in 0..n {
        let r = labels[i] as usize;
        size[r] += 1;
        kappa[r] += a[i].iter().sum::<u64>();
        for j in 0..n {
            m[r][labels[j] as usize] += a[i][j];
        }
    }
    // m[r][s] now double counts: between pairs once per direction, internal
    // edges twice.
    let mut total = -(k as f64) * (n as f64).ln();
    for r in 0..k {
        let nr = size[r];
        total += ln_fact(nr);
        total += kappa[r] as f64 * (nr as f64).ln() + ln_fact(nr - 1) - ln_fact(nr + kappa[r] - 1);
        let mrr = m[r][r] / 2;
        total += ln_fact(mrr) - (mrr as f64 + 1.0) * (0.5 * p * (nr * nr) as f64 + 1.0).ln();
        for s in r + 1..k {
            let mrs = m[r][s];
            total += ln_fact(mrs) - (mrs as f64 + 1.0) * (p * (nr * size[s]) as f64 + 1.0).ln();
        }
    }
    total
}

/// All set partitions of `n` nodes as restricted-growth label vectors.
pub fn set_partitions(n: usize) -> Vec<Vec<u32>> {
    fn grow(prefix: &mut Vec<u32>, n: usize, max: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for g in 0..=max + 1 {
            prefix.push(g);
            grow(prefix, n, max.max(g), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        grow(&mut vec![0], n, 0, &mut out);
    }
    out
}

/// Probability of each set partition under the posterior summed over its
/// `k!` label assignments.
pub fn exact_set_partition_posterior(n: usize, edges: &[(usize, usize)], p: f64) -> Vec<(Vec<u32>, f64)> {
    let parts = set_partitions(n);
    let logw: Vec<f64> = parts
        .iter()
        .map(|g| {
            let k = *g.iter().max().unwrap() as u64 + 1;
            oracle_log_posterior(n, edges, g, p) + ln_fact(k)
        })
        .collect();
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logw.iter().map(|w| (w - top).exp()).sum();
    parts.into_iter().zip(logw).map(|(g, w)| (g, (w - top).exp() / z)).collect()
}

pub fn density(n: usize, edges: &[(usize, usize)]) -> f64 {
    2.0 * edges.len() as f64 / (n * n) as f64
}

/// Relabels in first-appearance order.
pub fn canonical(labels: &[u32]) -> Vec<u32> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len() as u32;
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Small fixed test graphs `(name, n, edges)`.
pub fn small_graphs() -> Vec<(&'static str, usize, Vec<(usize, usize)>)> {
    vec![
        ("path3", 3, vec![(0, 1), (1, 2)]),
        ("two triangles", 6, vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]),
        ("star5 with loop", 5, vec![(0, 1), (0, 2), (0, 3), (0, 4), (4, 4)]),
        ("multigraph4", 4, vec![(0, 1), (0, 1), (1, 2), (2, 3), (3, 0), (2, 2)]),
    ]
}
