//! Synthetic networks: the ring of cliques and the degree-corrected SBM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder};
use crate::partition::Partition;

/// `cliques` complete subgraphs of `size` nodes joined in a ring by single
/// edges. Clique `i` holds nodes `i*size .. (i+1)*size`; its node 0 links to
/// node 1 of clique `i+1 (mod cliques)`. Returns the graph and each node's
/// clique.
pub fn ring_of_cliques(cliques: usize, size: usize) -> Result<(Graph, Partition)> {
    ring_with_ports(cliques, size, |_| (0, 1))
}

/// As [`ring_of_cliques`], with the two port nodes of every ring edge drawn
/// uniformly at random from their cliques.
pub fn ring_of_cliques_random_ports(cliques: usize, size: usize, seed: u64) -> Result<(Graph, Partition)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ports: Vec<(usize, usize)> = (0..cliques)
        .map(|_| (rng.random_range(0..size.max(1)), rng.random_range(0..size.max(1))))
        .collect();
    ring_with_ports(cliques, size, |i| ports[i])
}

fn ring_with_ports(cliques: usize, size: usize, ports: impl Fn(usize) -> (usize, usize)) -> Result<(Graph, Partition)> {
    if cliques < 3 || size < 2 {
        return Err(Error::InvalidParameter(format!(
            "ring of cliques needs cliques >= 3 and size >= 2 (got {cliques}, {size})"
        )));
    }
    let n = cliques * size;
    let mut b = GraphBuilder::new(n);
    for c in 0..cliques {
        let base = c * size;
        for i in 0..size {
            for j in i + 1..size {
                b.add_edge(base + i, base + j);
            }
        }
        let (out_port, in_port) = ports(c);
        let next = (c + 1) % cliques;
        b.add_edge(base + out_port, next * size + in_port);
    }
    let truth: Vec<u32> = (0..n).map(|i| (i / size) as u32).collect();
    Ok((b.build(), Partition::new(truth)?))
}

/// Parameters of the degree-corrected stochastic block model.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsbmParams {
    pub groups: Partition,
    /// Degree propensities, mean 1 within every group.
    pub theta: Vec<f64>,
    /// Symmetric `k x k` matrix of non-negative rates.
    pub omega: Vec<Vec<f64>>,
    pub seed: u64,
}

impl DcsbmParams {
    /// Two-level planted partition with unit propensities.
    pub fn planted(sizes: &[usize], omega_in: f64, omega_out: f64, seed: u64) -> Result<Self> {
        let labels: Vec<u32> = sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &s)| std::iter::repeat_n(g as u32, s))
            .collect();
        let k = sizes.len();
        let omega = (0..k)
            .map(|r| (0..k).map(|s| if r == s { omega_in } else { omega_out }).collect())
            .collect();
        Ok(Self {
            theta: vec![1.0; labels.len()],
            groups: Partition::new(labels)?,
            omega,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.groups.node_count();
        let k = self.groups.community_count();
        if self.theta.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: self.theta.len(),
            });
        }
        if self.omega.len() != k || self.omega.iter().any(|row| row.len() != k) {
            return Err(Error::InvalidParameter(format!("omega must be {k} x {k}")));
        }
        for r in 0..k {
            for s in 0..k {
                let w = self.omega[r][s];
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::InvalidParameter(format!("omega[{r}][{s}] = {w} is not a non-negative rate")));
                }
                if w != self.omega[s][r] {
                    return Err(Error::InvalidParameter("omega must be symmetric".into()));
                }
            }
        }
        if self.theta.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter("theta must be non-negative".into()));
        }
        let sizes = self.groups.sizes();
        let mut sums = vec![0.0; k];
        for (i, &t) in self.theta.iter().enumerate() {
            sums[self.groups.community_of(i)] += t;
        }
        for r in 0..k {
            let mean = sums[r] / sizes[r] as f64;
            if (mean - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("theta mean in group {r} is {mean}, expected 1")));
            }
        }
        Ok(())
    }
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Draws a multigraph: `Poisson(theta_i theta_j omega_{g_i g_j})` edges for
/// each pair `i < j` and `Poisson(theta_i^2 omega_{g_i g_i} / 2)` self-loops.
pub fn dcsbm_generate(params: &DcsbmParams) -> Result<Graph> {
    params.validate()?;
    let n = params.groups.node_count();
    let g = params.groups.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = GraphBuilder::new(n);
    for i in 0..n {
        let ti = params.theta[i];
        let row = &params.omega[g[i] as usize];
        let loops = poisson(0.5 * ti * ti * row[g[i] as usize], &mut rng);
        b.add_edges(i, i, loops);
        for j in i + 1..n {
            let count = poisson(ti * params.theta[j] * row[g[j] as usize], &mut rng);
            b.add_edges(i, j, count);
        }
    }
    Ok(b.build())
}

/// JSON form of [`DcsbmParams`]: either explicit `groups` or block `sizes`,
/// optional `theta` (defaults to all ones), and `omega`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DcsbmSpec {
    #[serde(default)]
    pub groups: Option<Vec<u32>>,
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
}

impl DcsbmSpec {
    pub fn into_params(self, seed: u64) -> Result<DcsbmParams> {
        let labels = match (self.groups, self.sizes) {
            (Some(g), None) => g,
            (None, Some(sizes)) => sizes
                .iter()
                .enumerate()
                .flat_map(|(g, &s)| std::iter::repeat_n(g as u32, s))
                .collect(),
            _ => {
                return Err(Error::InvalidParameter(
                    "dcsbm spec needs exactly one of `groups` or `sizes`".into(),
                ))
            }
        };
        let n = labels.len();
        let params = DcsbmParams {
            groups: Partition::new(labels)?,
            theta: self.theta.unwrap_or_else(|| vec![1.0; n]),
            omega: self.omega,
            seed,
        };
        params.validate()?;
        Ok(params)
    }
}
