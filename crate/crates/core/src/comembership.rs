//! Pairwise co-membership frequencies across an ensemble, their stratified
//! histograms, and the meet (intersection) of several divisions.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::sampler::SampleEnsemble;

/// Default number of histogram bins on `[0, 1]`.
pub const DEFAULT_BINS: usize = 50;

/// Dense symmetric matrix of `P(g_i = g_j)` estimated from an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct CoMatrix {
    n: usize,
    values: Vec<f64>,
}

impl CoMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Exact empirical co-membership frequencies over all records.
pub fn comembership_matrix(ensemble: &SampleEnsemble) -> Result<CoMatrix> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n = ensemble.node_count();
    let counts = ensemble
        .records()
        .par_iter()
        .fold(
            || vec![0u32; n * n],
            |mut acc, r| {
                for members in r.partition.members() {
                    for &i in &members {
                        for &j in &members {
                            acc[i * n + j] += 1;
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u32; n * n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let total = ensemble.len() as f64;
    Ok(CoMatrix {
        n,
        values: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

/// Normalized histogram of the co-membership values of one pair class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    #[serde(skip)]
    pub pairs: usize,
    #[serde(skip)]
    pub mean: f64,
}

/// Bin index on `[0, 1]` with right-closed bins; 0 falls in the first bin.
fn bin_of(value: f64, bins: usize) -> usize {
    let scaled = (value * bins as f64).ceil() as isize - 1;
    scaled.clamp(0, bins as isize - 1) as usize
}

/// Per-class histograms of the off-diagonal entries `i < j`. `classify`
/// must label every pair.
pub fn stratified_histogram<F>(matrix: &CoMatrix, classify: F, bins: usize) -> Result<BTreeMap<String, Histogram>>
where
    F: Fn(usize, usize) -> Option<String>,
{
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be >= 1".into()));
    }
    let mut counts: BTreeMap<String, (Vec<usize>, f64)> = BTreeMap::new();
    let n = matrix.node_count();
    for i in 0..n {
        for j in i + 1..n {
            let class = classify(i, j)
                .ok_or_else(|| Error::InvalidParameter(format!("pair ({i}, {j}) has no class")))?;
            let v = matrix.get(i, j);
            let entry = counts.entry(class).or_insert_with(|| (vec![0; bins], 0.0));
            entry.0[bin_of(v, bins)] += 1;
            entry.1 += v;
        }
    }
    let edges: Vec<f64> = (0..=bins).map(|b| b as f64 / bins as f64).collect();
    Ok(counts
        .into_iter()
        .map(|(class, (hist, sum))| {
            let pairs: usize = hist.iter().sum();
            let masses = hist.iter().map(|&c| c as f64 / pairs as f64).collect();
            (
                class,
                Histogram {
                    bin_edges: edges.clone(),
                    masses,
                    pairs,
                    mean: sum / pairs as f64,
                },
            )
        })
        .collect())
}

/// Pair classifier for ring-of-cliques graphs: pairs are labeled by the ring
/// distance between their cliques (`"distance 0"` for the same clique).
pub fn ring_distance_classifier(clique_of: &[usize], cliques: usize) -> impl Fn(usize, usize) -> Option<String> + '_ {
    move |i, j| {
        let (a, b) = (*clique_of.get(i)?, *clique_of.get(j)?);
        let d = a.abs_diff(b);
        Some(format!("distance {}", d.min(cliques - d)))
    }
}

/// Coarsest partition refining every input: nodes share a class iff they
/// share a community in all inputs. Classes are labeled in first-node order.
pub fn meet_partition(partitions: &[&Partition]) -> Result<Partition> {
    let first = partitions
        .first()
        .ok_or_else(|| Error::InvalidParameter("meet of zero partitions".into()))?;
    let n = first.node_count();
    for p in partitions {
        if p.node_count() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: p.node_count(),
            });
        }
    }
    let keys: Vec<Vec<u32>> = (0..n)
        .map(|i| partitions.iter().map(|p| p.labels()[i]).collect())
        .collect();
    Partition::from_labels(&keys.iter().collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;
    use crate::sampler::SampleRecord;

    fn ensemble(parts: &[Partition]) -> SampleEnsemble {
        let n = parts[0].node_count();
        let text: String = (1..n).map(|i| format!("{} {}\n", i - 1, i)).collect();
        let g = load_edge_list(text.as_bytes()).unwrap();
        let mut e = SampleEnsemble::new(g.fingerprint());
        for (s, p) in parts.iter().enumerate() {
            e.push(SampleRecord {
                chain: 0,
                step: s as u64 + 1,
                log_posterior: 0.0,
                partition: p.clone(),
            })
            .unwrap();
        }
        e
    }

    #[test]
    fn single_record_single_community() {
        let m = comembership_matrix(&ensemble(&[Partition::single(4)])).unwrap();
        assert!((0..4).all(|i| m.row(i).iter().all(|&v| v == 1.0)));
    }

    #[test]
    fn together_and_apart_average_to_half() {
        let m = comembership_matrix(&ensemble(&[Partition::single(4), Partition::singletons(4)])).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), if i == j { 1.0 } else { 0.5 });
            }
        }
    }

    #[test]
    fn empty_ensemble_rejected() {
        let g = load_edge_list("a b".as_bytes()).unwrap();
        assert!(comembership_matrix(&SampleEnsemble::new(g.fingerprint())).is_err());
    }

    #[test]
    fn histogram_binning() {
        assert_eq!(bin_of(0.0, 50), 0);
        assert_eq!(bin_of(0.02, 50), 0);
        assert_eq!(bin_of(0.0201, 50), 1);
        assert_eq!(bin_of(1.0, 50), 49);
        let m = comembership_matrix(&ensemble(&[Partition::single(4), Partition::singletons(4)])).unwrap();
        let h = stratified_histogram(&m, |_, _| Some("all".to_string()), 10).unwrap();
        let all = &h["all"];
        assert_eq!(all.masses.iter().filter(|&&x| x > 0.0).count(), 1);
        assert!((all.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(all.masses[4], 1.0);
        assert_eq!(all.bin_edges.len(), 11);
    }

    #[test]
    fn unlabeled_pair_is_an_error() {
        let m = comembership_matrix(&ensemble(&[Partition::single(3)])).unwrap();
        let res = stratified_histogram(&m, |i, _| (i == 0).then(|| "x".to_string()), 5);
        assert!(res.is_err());
    }

    #[test]
    fn ring_classes() {
        let cliques = [0, 0, 1, 1, 2, 2, 3, 3, 4, 4];
        let f = ring_distance_classifier(&cliques, 5);
        assert_eq!(f(0, 1).unwrap(), "distance 0");
        assert_eq!(f(0, 2).unwrap(), "distance 1");
        assert_eq!(f(0, 9).unwrap(), "distance 1");
        assert_eq!(f(0, 5).unwrap(), "distance 2");
    }

    #[test]
    fn meet_examples() {
        let a = Partition::new(vec![0, 0, 1]).unwrap();
        let b = Partition::new(vec![0, 1, 1]).unwrap();
        assert_eq!(meet_partition(&[&a, &b]).unwrap(), Partition::singletons(3));
        let c = Partition::new(vec![1, 1, 0, 2]).unwrap();
        assert_eq!(meet_partition(&[&c]).unwrap(), c.canonical());
        assert!(meet_partition(&[&a, &c]).is_err());
    }
}
