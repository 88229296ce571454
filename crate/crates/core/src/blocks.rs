//! Building blocks: the block assignment that carries the most information,
//! on average, about sampled community divisions.
//!
//! The search is agglomerative. It starts from one block per node, repeatedly
//! merges the pair of blocks whose union most increases (or least decreases)
//! the ensemble-mean reduced mutual information, and stops when a single
//! block remains. The assignment at the maximum of that trace is returned.
//!
//! Merging blocks `x` and `y` only changes the table cells of those two
//! columns, so per record the change in `sum log c_gh!` is
//! `sum_g [log (c_gx + c_gy)! - log c_gx! - log c_gy!]`. These pair gains are
//! kept in a dense matrix summed over records; after a merge only the row of
//! the merged block is recomputed. The `log Omega` part depends on a record
//! only through its community sizes, so records are grouped by their sorted
//! row margins and the correction is evaluated once per distinct margin.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::{ln_factorial, Partition};
use crate::rmi::{mean_rmi, OmegaConfig};
use crate::sampler::SampleEnsemble;

/// Assignment of nodes to `q` nonempty blocks labeled `0..q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BlockAssignment {
    labels: Vec<u32>,
    q: usize,
}

impl BlockAssignment {
    pub fn new(labels: Vec<u32>) -> Result<Self> {
        let p = Partition::new(labels)?;
        let q = p.community_count();
        Ok(Self {
            labels: p.labels().to_vec(),
            q,
        })
    }

    /// Relabels arbitrary labels into `0..q` in first-node order.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(raw: &[T]) -> Result<Self> {
        let p = Partition::from_labels(raw)?;
        Ok(Self::from(p))
    }

    pub fn singletons(n: usize) -> Self {
        Self::from(Partition::singletons(n))
    }

    pub fn single(n: usize) -> Self {
        Self::from(Partition::single(n))
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn block_count(&self) -> usize {
        self.q
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn block_of(&self, node: usize) -> usize {
        self.labels[node] as usize
    }

    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.q];
        for (i, &h) in self.labels.iter().enumerate() {
            out[h as usize].push(i);
        }
        out
    }

    pub fn as_partition(&self) -> Partition {
        Partition::from_parts_unchecked(self.labels.clone(), self.q)
    }

    /// True if every block lies inside a single community of `partition`.
    pub fn refines(&self, partition: &Partition) -> bool {
        let mut owner: Vec<Option<u32>> = vec![None; self.q];
        for (i, &h) in self.labels.iter().enumerate() {
            let g = partition.labels()[i];
            match owner[h as usize] {
                None => owner[h as usize] = Some(g),
                Some(o) if o != g => return false,
                _ => {}
            }
        }
        true
    }
}

impl From<Partition> for BlockAssignment {
    fn from(p: Partition) -> Self {
        let q = p.community_count();
        Self {
            labels: p.labels().to_vec(),
            q,
        }
    }
}

/// One state visited by the agglomeration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub q: usize,
    pub mean_rmi: f64,
    /// The two blocks (by the id of their smallest node) merged to reach this
    /// state; `None` for the initial all-singletons state.
    pub merged: Option<(usize, usize)>,
}

/// Mean RMI along the merge sequence, from `q = n` down to `q = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeTrace {
    pub entries: Vec<TraceEntry>,
    /// Index of the entry with the largest mean RMI.
    pub best: usize,
}

impl MergeTrace {
    pub fn best_entry(&self) -> &TraceEntry {
        &self.entries[self.best]
    }

    /// `(q, mean RMI)` pairs in merge order.
    pub fn curve(&self) -> Vec<(usize, f64)> {
        self.entries.iter().map(|e| (e.q, e.mean_rmi)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GreedyConfig {
    pub omega: OmegaConfig,
    /// Score merges on at most this many evenly spaced records.
    pub subsample: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyResult {
    pub blocks: BlockAssignment,
    pub trace: MergeTrace,
}

/// Per-record contingency table stored by rows; each row lists the blocks
/// present in that community with their counts.
#[derive(Debug, Clone)]
struct RecordTable {
    rows: Vec<Vec<(u32, u32)>>,
}

impl RecordTable {
    fn new(p: &Partition) -> Self {
        let mut rows = vec![Vec::new(); p.community_count()];
        for (i, &g) in p.labels().iter().enumerate() {
            rows[g as usize].push((i as u32, 1));
        }
        Self { rows }
    }

    /// Folds block `y` into block `x`, then adds the pair gains between `x`
    /// and every other block sharing a row with it into `gains`.
    fn merge(&mut self, x: u32, y: u32, gains: &mut [f64], lnf: &[f64]) {
        for row in &mut self.rows {
            let py = row.iter().position(|e| e.0 == y);
            let mut px = row.iter().position(|e| e.0 == x);
            if let Some(py) = py {
                let cy = row[py].1;
                match px {
                    Some(i) => row[i].1 += cy,
                    None => {
                        row.push((x, cy));
                        px = Some(row.len() - 1);
                    }
                }
                let px_now = px.unwrap();
                row.swap_remove(py);
                px = Some(if px_now == row.len() { py } else { px_now });
            }
            if let Some(px) = px {
                let cx = row[px].1 as usize;
                for &(h, c) in row.iter() {
                    if h != x {
                        let c = c as usize;
                        gains[h as usize] += lnf[cx + c] - lnf[cx] - lnf[c];
                    }
                }
            }
        }
    }

    fn sum_ln_factorials(&self, lnf: &[f64]) -> f64 {
        self.rows.iter().flatten().map(|&(_, c)| lnf[c as usize]).sum()
    }
}

const CHUNKS: usize = 64;

/// Mean `log Omega(a, b)` over records grouped by sorted row margins.
struct OmegaAverager<'a> {
    margins: Vec<(Vec<u64>, f64)>,
    omega: &'a OmegaConfig,
}

impl OmegaAverager<'_> {
    fn mean(&self, cols: &[u64]) -> Result<f64> {
        let mut acc = 0.0;
        for (a, weight) in &self.margins {
            acc += weight * self.omega.log_omega(a, cols)?;
        }
        Ok(acc)
    }
}

/// Greedy agglomerative search for the block assignment maximizing the
/// ensemble-mean reduced mutual information.
pub fn greedy_blocks(ensemble: &SampleEnsemble, config: &GreedyConfig) -> Result<GreedyResult> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let selected;
    let ensemble = match config.subsample {
        Some(cap) => {
            selected = ensemble.subsample(cap);
            &selected
        }
        None => ensemble,
    };
    let n = ensemble.node_count();
    let records = ensemble.len() as f64;
    let nf = n as f64;
    let lnf: Vec<f64> = (0..=n as u64).map(ln_factorial).collect();

    let mut margin_counts: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut mean_row_term = 0.0;
    for p in ensemble.partitions() {
        let mut a = p.sizes();
        mean_row_term += a.iter().map(|&x| lnf[x as usize]).sum::<f64>();
        a.sort_unstable();
        *margin_counts.entry(a).or_insert(0) += 1;
    }
    mean_row_term /= records;
    let mut margins: Vec<(Vec<u64>, f64)> = margin_counts
        .into_iter()
        .map(|(a, c)| (a, c as f64 / records))
        .collect();
    margins.sort_by(|x, y| x.0.cmp(&y.0));
    let averager = OmegaAverager {
        margins,
        omega: &config.omega,
    };

    let mut tables: Vec<RecordTable> = ensemble.partitions().map(RecordTable::new).collect();

    // Pair gains summed over records; symmetric, indexed by block id.
    let mut gains = vec![0.0f64; n * n];
    {
        let ln2 = lnf[2];
        let mut together = vec![0u32; n * n];
        for p in ensemble.partitions() {
            for members in p.members() {
                for (idx, &i) in members.iter().enumerate() {
                    for &j in &members[idx + 1..] {
                        together[i * n + j] += 1;
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let v = together[i * n + j] as f64 * ln2;
                gains[i * n + j] = v;
                gains[j * n + i] = v;
            }
        }
    }

    let mut alive: Vec<usize> = (0..n).collect();
    let mut size = vec![1u64; n];
    let mut cell_term = 0.0; // mean over records of sum_gh log c_gh!
    let mut col_term = 0.0; // sum_h log b_h!
    let mut omega_term = averager.mean(&vec![1u64; n])?;
    let ln_n_fact = ln_factorial(n as u64);
    let score = |cell: f64, col: f64, omega: f64| (ln_n_fact + cell - mean_row_term - col - omega) / nf;

    let mut entries = vec![TraceEntry {
        q: n,
        mean_rmi: score(cell_term, col_term, omega_term),
        merged: None,
    }];
    let mut merges: Vec<(usize, usize)> = Vec::with_capacity(n.saturating_sub(1));

    while alive.len() > 1 {
        // log Omega after a merge depends only on the merged column sums.
        let mut omega_after: HashMap<(u64, u64), f64> = HashMap::new();
        let cols: Vec<u64> = alive.iter().map(|&h| size[h]).collect();
        for (ix, &x) in alive.iter().enumerate() {
            for &y in &alive[ix + 1..] {
                let key = (size[x].min(size[y]), size[x].max(size[y]));
                if let std::collections::hash_map::Entry::Vacant(slot) = omega_after.entry(key) {
                    let mut merged = Vec::with_capacity(cols.len() - 1);
                    let mut skipped_small = false;
                    let mut skipped_large = false;
                    for &b in &cols {
                        if !skipped_small && b == key.0 {
                            skipped_small = true;
                        } else if !skipped_large && b == key.1 {
                            skipped_large = true;
                        } else {
                            merged.push(b);
                        }
                    }
                    merged.push(key.0 + key.1);
                    slot.insert(averager.mean(&merged)?);
                }
            }
        }

        let mut best: Option<(f64, usize, usize)> = None;
        for (ix, &x) in alive.iter().enumerate() {
            for &y in &alive[ix + 1..] {
                let (bx, by) = (size[x], size[y]);
                let key = (bx.min(by), bx.max(by));
                let d_cell = gains[x * n + y] / records;
                let d_col = ln_factorial(bx + by) - ln_factorial(bx) - ln_factorial(by);
                let d_omega = omega_after[&key] - omega_term;
                let delta = d_cell - d_col - d_omega;
                if best.is_none_or(|(b, _, _)| delta > b) {
                    best = Some((delta, x, y));
                }
            }
        }
        let (_, x, y) = best.expect("at least two blocks");
        let key = (size[x].min(size[y]), size[x].max(size[y]));
        cell_term += gains[x * n + y] / records;
        col_term += ln_factorial(size[x] + size[y]) - ln_factorial(size[x]) - ln_factorial(size[y]);
        omega_term = omega_after[&key];
        size[x] += size[y];
        size[y] = 0;
        alive.retain(|&h| h != y);
        merges.push((x, y));

        // Refresh the gain row of the merged block.
        let per_chunk = tables.len().div_ceil(CHUNKS).max(1);
        let partial: Vec<Vec<f64>> = tables
            .par_chunks_mut(per_chunk)
            .map(|chunk| {
                let mut row = vec![0.0; n];
                for t in chunk {
                    t.merge(x as u32, y as u32, &mut row, &lnf);
                }
                row
            })
            .collect();
        for h in 0..n {
            gains[x * n + h] = 0.0;
            gains[h * n + x] = 0.0;
            gains[y * n + h] = 0.0;
            gains[h * n + y] = 0.0;
        }
        for row in &partial {
            for &h in &alive {
                if h != x {
                    gains[x * n + h] += row[h];
                }
            }
        }
        for &h in &alive {
            gains[h * n + x] = gains[x * n + h];
        }

        if cfg!(debug_assertions) {
            let probe = merges.len() % tables.len();
            let direct = tables[probe].sum_ln_factorials(&lnf);
            let labels = assignment_after(n, &merges);
            let table = crate::rmi::contingency(&ensemble.records()[probe].partition, &labels)?;
            let expected: f64 = table.to_rows().iter().flatten().map(|&c| lnf[c as usize]).sum();
            debug_assert!((direct - expected).abs() < 1e-9);
        }

        entries.push(TraceEntry {
            q: alive.len(),
            mean_rmi: score(cell_term, col_term, omega_term),
            merged: Some((x, y)),
        });
    }

    let best = entries
        .iter()
        .enumerate()
        .fold(0, |b, (i, e)| if e.mean_rmi > entries[b].mean_rmi { i } else { b });
    let blocks = assignment_after(n, &merges[..best]);
    let last = entries.len() - 1;
    entries[0].mean_rmi = mean_rmi(ensemble, &BlockAssignment::singletons(n), &config.omega, None)?;
    entries[last].mean_rmi = mean_rmi(ensemble, &BlockAssignment::single(n), &config.omega, None)?;
    entries[best].mean_rmi = mean_rmi(ensemble, &blocks, &config.omega, None)?;
    Ok(GreedyResult {
        blocks,
        trace: MergeTrace { entries, best },
    })
}

/// Replays merges (each keeping the smaller id) from all-singleton blocks.
fn assignment_after(n: usize, merges: &[(usize, usize)]) -> BlockAssignment {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for &(x, y) in merges {
        let rx = find(&mut parent, x);
        let ry = find(&mut parent, y);
        parent[ry] = rx;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    BlockAssignment::from_labels(&roots).expect("nonempty")
}

/// How a division is assembled from blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisionDescription {
    /// Community each block is mapped to.
    pub block_to_community: Vec<usize>,
    /// Nodes whose community differs from their block's community.
    pub misfits: Vec<usize>,
}

/// Maps each block to the community holding most of its nodes (ties go to
/// the lower community index) and lists the nodes that disagree.
pub fn describe_division(partition: &Partition, blocks: &BlockAssignment) -> Result<DivisionDescription> {
    if partition.node_count() != blocks.node_count() {
        return Err(Error::SizeMismatch {
            expected: partition.node_count(),
            found: blocks.node_count(),
        });
    }
    let k = partition.community_count();
    let mut counts = vec![0usize; blocks.block_count() * k];
    for (i, &h) in blocks.labels().iter().enumerate() {
        counts[h as usize * k + partition.community_of(i)] += 1;
    }
    let block_to_community: Vec<usize> = counts
        .chunks(k)
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0, |best, (g, &c)| if c > row[best] { g } else { best })
        })
        .collect();
    let misfits = (0..partition.node_count())
        .filter(|&i| block_to_community[blocks.block_of(i)] != partition.community_of(i))
        .collect();
    Ok(DivisionDescription {
        block_to_community,
        misfits,
    })
}
