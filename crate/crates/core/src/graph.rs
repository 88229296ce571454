//! Undirected multigraphs with integer edge multiplicities and self-loops.
//!
//! The adjacency convention is the one used by the likelihood: for `i != j`
//! the entry `A_ij` is the number of edges between `i` and `j`, while the
//! diagonal entry `A_ii` is *twice* the number of self-loops at `i`. With that
//! convention `d_i = sum_j A_ij` holds for every node and `sum_i d_i = 2m`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rustc_hash::FxHashMap;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// An immutable undirected multigraph over dense node ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    m: u64,
    degrees: Vec<u64>,
    /// Self-loop counts (so `A_ii = 2 * loops[i]`).
    loops: Vec<u64>,
    /// CSR adjacency excluding the diagonal: neighbour ids with multiplicities.
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<u64>,
    labels: Vec<String>,
}

/// Identity of a graph used to bind sample traces and derived files to it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub n: usize,
    pub m: u64,
    pub hash: String,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} m={} hash={}", self.n, self.m, self.hash)
    }
}

/// Accumulates edges before freezing them into a [`Graph`].
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    n: usize,
    /// Edge counts keyed by `(min, max)`; self-loops are stored as loop counts.
    edges: FxHashMap<(u32, u32), u64>,
    labels: Option<Vec<String>>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            edges: FxHashMap::default(),
            labels: None,
        }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        let mut b = Self::new(labels.len());
        b.labels = Some(labels);
        b
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Adds `count` edges between `u` and `v`. `u == v` adds self-loops.
    pub fn add_edges(&mut self, u: usize, v: usize, count: u64) {
        assert!(u < self.n && v < self.n, "node id out of range");
        if count == 0 {
            return;
        }
        let key = if u <= v { (u as u32, v as u32) } else { (v as u32, u as u32) };
        *self.edges.entry(key).or_insert(0) += count;
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        self.add_edges(u, v, 1);
    }

    pub fn build(self) -> Graph {
        let n = self.n;
        let labels = self
            .labels
            .unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
        let mut degrees = vec![0u64; n];
        let mut loops = vec![0u64; n];
        let mut lists: Vec<Vec<(u32, u64)>> = vec![Vec::new(); n];
        let mut m = 0u64;
        for (&(u, v), &c) in &self.edges {
            m += c;
            if u == v {
                loops[u as usize] += c;
                degrees[u as usize] += 2 * c;
            } else {
                lists[u as usize].push((v, c));
                lists[v as usize].push((u, c));
                degrees[u as usize] += c;
                degrees[v as usize] += c;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for list in &mut lists {
            list.sort_unstable();
            for &(t, w) in list.iter() {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Graph {
            n,
            m,
            degrees,
            loops,
            offsets,
            targets,
            weights,
            labels,
        }
    }
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Total number of edges `m = (1/2) sum_ij A_ij`, self-loops counted once.
    pub fn edge_count(&self) -> u64 {
        self.m
    }

    pub fn degree(&self, i: usize) -> u64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degrees
    }

    /// Number of self-loops at `i`.
    pub fn self_loops(&self, i: usize) -> u64 {
        self.loops[i]
    }

    /// Neighbours of `i` other than `i` itself, with edge multiplicities.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&t, &w)| (t as usize, w))
    }

    /// Adjacency entry `A_ij` (for `i == j`, twice the loop count).
    pub fn multiplicity(&self, i: usize, j: usize) -> u64 {
        if i == j {
            return 2 * self.loops[i];
        }
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.targets[range.clone()].binary_search(&(j as u32)) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0,
        }
    }

    /// Distinct unordered pairs `(i, j, count)` with `i <= j`; for `i == j`
    /// the count is the number of self-loops, not `A_ii`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let loops = (self.loops[i] > 0).then_some((i, i, self.loops[i]));
            loops
                .into_iter()
                .chain(self.neighbors(i).filter(move |&(j, _)| j > i).map(move |(j, w)| (i, j, w)))
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Edge density `2m / n^2`, the default value of the hyperparameter `p`.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        2.0 * self.m as f64 / (self.n as f64 * self.n as f64)
    }

    pub fn fingerprint(&self) -> Fingerprint {
        let mut hasher = Sha256::new();
        hasher.update((self.n as u64).to_le_bytes());
        for label in &self.labels {
            hasher.update((label.len() as u64).to_le_bytes());
            hasher.update(label.as_bytes());
        }
        for (i, j, c) in self.edges() {
            hasher.update((i as u64).to_le_bytes());
            hasher.update((j as u64).to_le_bytes());
            hasher.update(c.to_le_bytes());
        }
        let digest = hasher.finalize();
        let hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        Fingerprint {
            n: self.n,
            m: self.m,
            hash,
        }
    }
}

/// Reads a whitespace-separated edge list, one `u v` pair per line.
///
/// Tokens are mapped to ids in order of first appearance. Blank lines and
/// lines starting with `#` are skipped. Repeated lines add multiplicity and
/// `u u` adds a self-loop.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Graph> {
    let mut ids: FxHashMap<String, usize> = FxHashMap::default();
    let mut labels = Vec::new();
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected 2 tokens, found {}", tokens.len()),
            });
        }
        let mut id_of = |tok: &str| {
            *ids.entry(tok.to_string()).or_insert_with(|| {
                labels.push(tok.to_string());
                labels.len() - 1
            })
        };
        let u = id_of(tokens[0]);
        let v = id_of(tokens[1]);
        pairs.push((u, v));
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput("edge list contains no edges"));
    }
    let mut builder = GraphBuilder::with_labels(labels);
    for (u, v) in pairs {
        builder.add_edge(u, v);
    }
    Ok(builder.build())
}

/// Writes the graph as an edge list readable by [`load_edge_list`].
///
/// Lines are ordered so that nodes first appear in index order whenever the
/// graph allows it (always for graphs read by [`load_edge_list`]), so reading
/// the output back yields an identical graph. Isolated nodes have no line to
/// live on and are not written.
pub fn write_edge_list<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    // Multiplicity already written ahead of its turn, keyed by (min, max).
    let mut early: FxHashMap<(usize, usize), u64> = FxHashMap::default();
    for v in 0..n {
        let mut lower: Vec<(usize, u64)> = graph.neighbors(v).filter(|&(u, _)| u < v).collect();
        lower.sort_unstable();
        if !seen[v] && lower.is_empty() && graph.self_loops(v) == 0 {
            let first_up = graph.neighbors(v).map(|(u, _)| u).filter(|&u| u > v).min();
            if let Some(w) = first_up {
                writeln!(out, "{} {}", graph.label(v), graph.label(w))?;
                *early.entry((v, w)).or_insert(0) += 1;
                seen[v] = true;
                seen[w] = true;
            }
        }
        for (u, c) in lower {
            let done = early.get(&(u, v)).copied().unwrap_or(0);
            for _ in done..c {
                writeln!(out, "{} {}", graph.label(u), graph.label(v))?;
            }
            seen[u] = true;
            seen[v] = true;
        }
        for _ in 0..graph.self_loops(v) {
            writeln!(out, "{} {}", graph.label(v), graph.label(v))?;
            seen[v] = true;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum GmlToken {
    Open,
    Close,
    Word(String),
}

fn gml_tokens(text: &str) -> Vec<GmlToken> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '[' => {
                chars.next();
                out.push(GmlToken::Open);
            }
            ']' => {
                chars.next();
                out.push(GmlToken::Close);
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                    s.push(c);
                }
                out.push(GmlToken::Word(s));
            }
            '#' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '[' || c == ']' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push(GmlToken::Word(s));
            }
        }
    }
    out
}

/// Parses a record body starting after its `[`, returning the flat
/// key/value pairs and the index just past the closing `]`.
fn gml_record(tokens: &[GmlToken], mut pos: usize) -> Result<(BTreeMap<String, String>, usize)> {
    let mut fields = BTreeMap::new();
    let mut depth = 0usize;
    let mut key: Option<String> = None;
    while pos < tokens.len() {
        match &tokens[pos] {
            GmlToken::Open => {
                depth += 1;
                key = None;
            }
            GmlToken::Close => {
                if depth == 0 {
                    return Ok((fields, pos + 1));
                }
                depth -= 1;
            }
            GmlToken::Word(w) => {
                if depth == 0 {
                    match key.take() {
                        Some(k) => {
                            fields.entry(k).or_insert_with(|| w.clone());
                        }
                        None => key = Some(w.clone()),
                    }
                }
            }
        }
        pos += 1;
    }
    Err(Error::Parse {
        line: 0,
        msg: "unterminated GML record".into(),
    })
}

/// Reads the `node [ id N ]` / `edge [ source A target B ]` subset of GML.
/// Every other key is ignored. Node labels are the GML ids.
pub fn load_gml(text: &str) -> Result<Graph> {
    let tokens = gml_tokens(text);
    let mut node_ids: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let is_record = |name: &str| {
            matches!(&tokens[pos], GmlToken::Word(w) if w == name)
                && matches!(tokens.get(pos + 1), Some(GmlToken::Open))
        };
        if is_record("node") {
            let (fields, next) = gml_record(&tokens, pos + 2)?;
            let id = fields.get("id").ok_or_else(|| Error::Parse {
                line: 0,
                msg: "GML node without id".into(),
            })?;
            node_ids.push(id.clone());
            pos = next;
        } else if is_record("edge") {
            let (fields, next) = gml_record(&tokens, pos + 2)?;
            match (fields.get("source"), fields.get("target")) {
                (Some(s), Some(t)) => edges.push((s.clone(), t.clone())),
                _ => {
                    return Err(Error::Parse {
                        line: 0,
                        msg: "GML edge without source/target".into(),
                    })
                }
            }
            pos = next;
        } else {
            pos += 1;
        }
    }
    if node_ids.is_empty() {
        return Err(Error::EmptyInput("GML contains no nodes"));
    }
    let index: FxHashMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut resolved = Vec::with_capacity(edges.len());
    for (s, t) in &edges {
        let lookup = |id: &str| {
            index.get(id).copied().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("GML edge references unknown node {id}"),
            })
        };
        resolved.push((lookup(s)?, lookup(t)?));
    }
    let mut builder = GraphBuilder::with_labels(node_ids.clone());
    for (u, v) in resolved {
        builder.add_edge(u, v);
    }
    Ok(builder.build())
}
