//! Mutable division with incrementally maintained group statistics.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::{check_p, community_term, ln_factorial, GroupStats, Partition};

/// Destination of a single-node move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Existing(usize),
    /// A fresh community, labeled `k` until the move is applied.
    New,
}

/// A division together with its sufficient statistics, updated in place as
/// nodes move. Labels stay compact: when a community empties, the last label
/// is renumbered into the gap.
#[derive(Debug, Clone)]
pub struct PartitionState<'g> {
    graph: &'g Graph,
    p: f64,
    ln_n: f64,
    labels: Vec<u32>,
    sizes: Vec<u64>,
    kappa: Vec<u64>,
    internal: Vec<u64>,
    /// Symmetric sparse `m_rs` for `r != s`; zero entries are removed.
    between: Vec<FxHashMap<u32, u64>>,
    members: Vec<Vec<u32>>,
    /// Position of each node inside its community's member list.
    slot: Vec<u32>,
    lnf: Vec<f64>,
    edge_to: Vec<u64>,
    touched: Vec<u32>,
}

impl<'g> PartitionState<'g> {
    pub fn new(graph: &'g Graph, partition: &Partition, p: f64) -> Result<Self> {
        check_p(p)?;
        let n = graph.node_count();
        if partition.node_count() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: partition.node_count(),
            });
        }
        let k = partition.community_count();
        let max_arg = (n as u64 + 2 * graph.edge_count() + 2) as usize;
        let lnf = (0..=max_arg as u64).map(ln_factorial).collect();
        let mut state = Self {
            graph,
            p,
            ln_n: (n as f64).ln(),
            labels: partition.labels().to_vec(),
            sizes: vec![0; k],
            kappa: vec![0; k],
            internal: vec![0; k],
            between: vec![FxHashMap::default(); k],
            members: vec![Vec::new(); k],
            slot: vec![0; n],
            lnf,
            edge_to: vec![0; n + 1],
            touched: Vec::new(),
        };
        for i in 0..n {
            let r = state.labels[i] as usize;
            state.slot[i] = state.members[r].len() as u32;
            state.members[r].push(i as u32);
            state.sizes[r] += 1;
            state.kappa[r] += graph.degree(i);
        }
        for (i, j, c) in graph.edges() {
            let r = state.labels[i];
            let s = state.labels[j];
            if r == s {
                state.internal[r as usize] += c;
            } else {
                *state.between[r as usize].entry(s).or_insert(0) += c;
                *state.between[s as usize].entry(r).or_insert(0) += c;
            }
        }
        Ok(state)
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn community_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.labels[node] as usize
    }

    pub fn community_size(&self, r: usize) -> u64 {
        self.sizes[r]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn partition(&self) -> Partition {
        Partition::from_parts_unchecked(self.labels.clone(), self.sizes.len())
    }

    /// Snapshot of the maintained statistics in [`GroupStats`] form.
    pub fn stats(&self) -> GroupStats {
        let mut between = BTreeMap::new();
        for (r, row) in self.between.iter().enumerate() {
            for (&s, &c) in row {
                if r < s as usize {
                    between.insert((r, s as usize), c);
                }
            }
        }
        GroupStats {
            sizes: self.sizes.clone(),
            kappa: self.kappa.clone(),
            internal: self.internal.clone(),
            between,
        }
    }

    #[inline]
    fn lnf(&self, x: u64) -> f64 {
        self.lnf[x as usize]
    }

    /// Full evaluation of the log posterior from the maintained statistics.
    pub fn log_posterior(&self) -> f64 {
        let p = self.p;
        let k = self.sizes.len();
        let mut total = -(k as f64) * self.ln_n;
        for r in 0..k {
            let nr = self.sizes[r] as f64;
            total += self.lnf(self.sizes[r]);
            total += community_term(self.sizes[r], self.kappa[r], |x| self.lnf(x));
            let mrr = self.internal[r];
            total += self.lnf(mrr) - (mrr as f64 + 1.0) * (0.5 * p * nr * nr).ln_1p();
        }
        for r in 0..k {
            let row = &self.between[r];
            for s in r + 1..k {
                let mrs = row.get(&(s as u32)).copied().unwrap_or(0);
                let lambda = p * self.sizes[r] as f64 * self.sizes[s] as f64;
                total += self.lnf(mrs) - (mrs as f64 + 1.0) * lambda.ln_1p();
            }
        }
        total
    }

    /// Fills `edge_to[s]` with the edge count from `node` into community `s`
    /// (self-loops excluded) and records the touched labels.
    fn tally(&mut self, node: usize) {
        for &s in &self.touched {
            self.edge_to[s as usize] = 0;
        }
        self.touched.clear();
        for (j, w) in self.graph.neighbors(node) {
            let s = self.labels[j];
            if self.edge_to[s as usize] == 0 {
                self.touched.push(s);
            }
            self.edge_to[s as usize] += w;
        }
    }

    fn resolve(&self, target: Target) -> usize {
        match target {
            Target::Existing(t) => {
                assert!(t < self.sizes.len(), "target community out of range");
                t
            }
            Target::New => self.sizes.len(),
        }
    }

    /// True when the move leaves the set partition unchanged.
    pub fn is_null_move(&self, node: usize, target: Target) -> bool {
        let r = self.labels[node] as usize;
        let t = self.resolve(target);
        t == r || (t == self.sizes.len() && self.sizes[r] == 1)
    }

    /// Community count after the move.
    pub fn community_count_after(&self, node: usize, target: Target) -> usize {
        if self.is_null_move(node, target) {
            return self.sizes.len();
        }
        let r = self.labels[node] as usize;
        let k = self.sizes.len();
        let mut k_after = k;
        if self.sizes[r] == 1 {
            k_after -= 1;
        }
        if matches!(target, Target::New) {
            k_after += 1;
        }
        k_after
    }

    /// Change in log posterior if `node` moved to `target`. Only the terms
    /// involving the source and destination communities are touched.
    pub fn delta_log_posterior(&mut self, node: usize, target: Target) -> f64 {
        if self.is_null_move(node, target) {
            return 0.0;
        }
        self.tally(node);
        let p = self.p;
        let k = self.sizes.len();
        let r = self.labels[node] as usize;
        let t = self.resolve(target);
        let is_new = t == k;

        let d = self.graph.degree(node);
        let loops = self.graph.self_loops(node);
        let e_r = self.edge_to[r];
        let e_t = if is_new { 0 } else { self.edge_to[t] };

        let nr = self.sizes[r];
        let nt = if is_new { 0 } else { self.sizes[t] };
        let nr2 = nr - 1;
        let nt2 = nt + 1;
        let kr = self.kappa[r];
        let kt = if is_new { 0 } else { self.kappa[t] };
        let mrr = self.internal[r];
        let mtt = if is_new { 0 } else { self.internal[t] };
        let mrt = if is_new {
            0
        } else {
            self.between[r].get(&(t as u32)).copied().unwrap_or(0)
        };

        let mut delta = 0.0;

        // prior
        let dk = (is_new as i64) - ((nr2 == 0) as i64);
        delta -= dk as f64 * self.ln_n;
        delta += self.lnf(nr2) - self.lnf(nr) + self.lnf(nt2) - self.lnf(nt);

        // degree terms
        let lnf = |x: u64| self.lnf[x as usize];
        delta += community_term(nr2, kr - d, lnf) - community_term(nr, kr, lnf);
        delta += community_term(nt2, kt + d, lnf) - community_term(nt, kt, lnf);

        // internal edges
        let diag = |m: u64, size: u64| {
            let s = size as f64;
            lnf(m) - (m as f64 + 1.0) * (0.5 * p * s * s).ln_1p()
        };
        delta += diag(mrr - e_r - loops, nr2) - diag(mrr, nr);
        delta += diag(mtt + e_t + loops, nt2) - diag(mtt, nt);

        // the r-t pair
        let pair = |m: u64, a: u64, b: u64| {
            lnf(m) - (m as f64 + 1.0) * (p * a as f64 * b as f64).ln_1p()
        };
        delta += pair(mrt + e_r - e_t, nr2, nt2) - pair(mrt, nr, nt);

        // size-only parts of every other pair involving r or t
        let (fr, fr2, ft, ft2) = (
            p * nr as f64,
            p * nr2 as f64,
            p * nt as f64,
            p * nt2 as f64,
        );
        for s in 0..k {
            if s == r || s == t {
                continue;
            }
            let ns = self.sizes[s] as f64;
            delta += (fr * ns).ln_1p() - (fr2 * ns).ln_1p() + (ft * ns).ln_1p() - (ft2 * ns).ln_1p();
        }

        // edge-count parts for pairs (r, s)
        for (&s, &m) in &self.between[r] {
            let s = s as usize;
            if s == t {
                continue;
            }
            let ns = self.sizes[s] as f64;
            let m2 = m - self.edge_to[s];
            delta += lnf(m2) - m2 as f64 * (fr2 * ns).ln_1p();
            delta -= lnf(m) - m as f64 * (fr * ns).ln_1p();
        }

        // edge-count parts for pairs (t, s)
        if !is_new {
            for (&s, &m) in &self.between[t] {
                let s = s as usize;
                if s == r {
                    continue;
                }
                let ns = self.sizes[s] as f64;
                let m2 = m + self.edge_to[s];
                delta += lnf(m2) - m2 as f64 * (ft2 * ns).ln_1p();
                delta -= lnf(m) - m as f64 * (ft * ns).ln_1p();
            }
        }
        for &s in &self.touched {
            let s = s as usize;
            if s == r || s == t {
                continue;
            }
            if !is_new && self.between[t].contains_key(&(s as u32)) {
                continue;
            }
            let e = self.edge_to[s];
            let ns = self.sizes[s] as f64;
            delta += lnf(e) - e as f64 * (ft2 * ns).ln_1p();
        }
        delta
    }

    /// Moves `node` to `target`, updating all statistics. Returns the label
    /// the node ends up with after compaction.
    pub fn apply_move(&mut self, node: usize, target: Target) -> usize {
        if self.is_null_move(node, target) {
            return self.labels[node] as usize;
        }
        self.tally(node);
        let r = self.labels[node] as usize;
        let t = self.resolve(target);
        if t == self.sizes.len() {
            self.sizes.push(0);
            self.kappa.push(0);
            self.internal.push(0);
            self.between.push(FxHashMap::default());
            self.members.push(Vec::new());
        }
        let d = self.graph.degree(node);
        let loops = self.graph.self_loops(node);
        let e_r = self.edge_to[r];
        let e_t = self.edge_to[t];

        for idx in 0..self.touched.len() {
            let s = self.touched[idx] as usize;
            if s == r || s == t {
                continue;
            }
            let e = self.edge_to[s];
            self.add_between(r, s, -(e as i64));
            self.add_between(t, s, e as i64);
        }
        self.add_between(r, t, e_r as i64 - e_t as i64);
        self.internal[r] -= e_r + loops;
        self.internal[t] += e_t + loops;
        self.sizes[r] -= 1;
        self.sizes[t] += 1;
        self.kappa[r] -= d;
        self.kappa[t] += d;

        // member lists
        let pos = self.slot[node] as usize;
        self.members[r].swap_remove(pos);
        if let Some(&moved) = self.members[r].get(pos) {
            self.slot[moved as usize] = pos as u32;
        }
        self.slot[node] = self.members[t].len() as u32;
        self.members[t].push(node as u32);
        self.labels[node] = t as u32;

        // stale scratch entries refer to pre-move labels
        for &s in &self.touched {
            self.edge_to[s as usize] = 0;
        }
        self.touched.clear();

        if self.sizes[r] == 0 {
            self.remove_empty(r);
            if t == self.sizes.len() {
                return r;
            }
        }
        t
    }

    fn add_between(&mut self, a: usize, b: usize, change: i64) {
        if change == 0 {
            return;
        }
        for (x, y) in [(a, b), (b, a)] {
            let entry = self.between[x].entry(y as u32).or_insert(0);
            let value = *entry as i64 + change;
            debug_assert!(value >= 0);
            if value == 0 {
                self.between[x].remove(&(y as u32));
            } else {
                *entry = value as u64;
            }
        }
    }

    /// Drops the empty community `r`, renumbering the last label into it.
    fn remove_empty(&mut self, r: usize) {
        debug_assert!(self.sizes[r] == 0 && self.between[r].is_empty());
        let last = self.sizes.len() - 1;
        if r != last {
            self.sizes.swap(r, last);
            self.kappa.swap(r, last);
            self.internal.swap(r, last);
            self.members.swap(r, last);
            self.between.swap(r, last);
            for &i in &self.members[r] {
                self.labels[i as usize] = r as u32;
            }
            let neighbours: Vec<(u32, u64)> = self.between[r].iter().map(|(&s, &c)| (s, c)).collect();
            for (s, c) in neighbours {
                let row = &mut self.between[s as usize];
                row.remove(&(last as u32));
                row.insert(r as u32, c);
            }
        }
        self.sizes.pop();
        self.kappa.pop();
        self.internal.pop();
        self.members.pop();
        self.between.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;
    use crate::partition::{compute_stats, log_posterior};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph() -> Graph {
        load_edge_list("a b\nb c\nc a\nc d\nd e\ne f\nf d\na a\nb c\ng d".as_bytes()).unwrap()
    }

    #[test]
    fn stats_match_compute_stats() {
        let g = graph();
        let part = Partition::new(vec![0, 0, 1, 1, 2, 2, 0]).unwrap();
        let st = PartitionState::new(&g, &part, g.density()).unwrap();
        assert_eq!(st.stats(), compute_stats(&g, &part).unwrap());
        let full = log_posterior(&g, &part, g.density()).unwrap();
        assert!((st.log_posterior() - full).abs() < 1e-10);
    }

    #[test]
    fn self_move_is_zero() {
        let g = graph();
        let mut st = PartitionState::new(&g, &Partition::singletons(7), g.density()).unwrap();
        assert_eq!(st.delta_log_posterior(3, Target::Existing(3)), 0.0);
        assert_eq!(st.delta_log_posterior(3, Target::New), 0.0);
    }

    #[test]
    fn random_moves_match_recomputation() {
        let g = graph();
        let p = g.density();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut st = PartitionState::new(&g, &Partition::single(7), p).unwrap();
        for _ in 0..5000 {
            let i = rng.random_range(0..7);
            let k = st.community_count();
            let choice = rng.random_range(0..=k);
            let target = if choice == k { Target::New } else { Target::Existing(choice) };
            let before = st.log_posterior();
            let delta = st.delta_log_posterior(i, target);
            st.apply_move(i, target);
            let part = st.partition();
            assert!(Partition::new(part.labels().to_vec()).is_ok());
            assert_eq!(st.stats(), compute_stats(&g, &part).unwrap());
            let after = log_posterior(&g, &part, p).unwrap();
            assert!((after - before - delta).abs() < 1e-9, "delta {delta} vs {}", after - before);
        }
    }

    #[test]
    fn move_and_reverse_cancel() {
        let g = graph();
        let p = g.density();
        let part = Partition::new(vec![0, 0, 1, 1, 2, 2, 1]).unwrap();
        let mut st = PartitionState::new(&g, &part, p).unwrap();
        let forward = st.delta_log_posterior(2, Target::Existing(0));
        st.apply_move(2, Target::Existing(0));
        let back = st.delta_log_posterior(2, Target::Existing(1));
        assert!((forward + back).abs() < 1e-10);
    }
}
