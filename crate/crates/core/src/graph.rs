//! Labeled multi-tier graphs, edge flips, datasets and their JSON-lines format.
//!
//! Graphs are immutable values. Every mutation (an edge flip, a perturbation
//! plan) produces a new [`LabeledGraph`]; the original is never touched, so
//! graphs can be shared freely between worker threads.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Errors raised while building, perturbing or (de)serializing graphs.
#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("inapplicable flip: {direction} ({u}, {v})")]
    InapplicableFlip {
        u: usize,
        v: usize,
        direction: FlipDirection,
    },
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: schema error in `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Which tier of the scene graph a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Object,
    Feature,
}

/// An undirected weighted edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// Undirected graph with categorical node labels, node tiers and weighted edges.
///
/// The edge list is kept sorted by `(u, v)` with `u < v`, so two graphs with
/// equal content compare and serialize identically.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    id: String,
    labels: Vec<String>,
    tiers: Vec<Tier>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
}

impl PartialEq for LabeledGraph {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.same_content(other)
    }
}

impl LabeledGraph {
    /// Builds a graph, canonicalizing edge endpoints and order.
    ///
    /// Rejects self-loops, duplicate edges, out-of-range endpoints and
    /// negative or non-finite weights.
    pub fn new(
        id: impl Into<String>,
        labels: Vec<String>,
        tiers: Vec<Tier>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(GraphError::Invalid("graph must have at least one node".into()));
        }
        if tiers.len() != n {
            return Err(GraphError::Invalid(format!(
                "{} labels but {} tiers",
                n,
                tiers.len()
            )));
        }
        let mut canon = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(GraphError::Invalid(format!("self-loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(GraphError::Invalid(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(GraphError::Invalid(format!(
                    "edge ({a}, {b}) has invalid weight {w}"
                )));
            }
            canon.push(Edge {
                u: a.min(b),
                v: a.max(b),
                w,
            });
        }
        canon.sort_by(|x, y| (x.u, x.v).cmp(&(y.u, y.v)));
        if let Some(pair) = canon.windows(2).find(|p| (p[0].u, p[0].v) == (p[1].u, p[1].v)) {
            return Err(GraphError::Invalid(format!(
                "duplicate edge ({}, {})",
                pair[0].u, pair[0].v
            )));
        }
        Ok(Self::from_canonical(id.into(), labels, tiers, canon))
    }

    fn from_canonical(id: String, labels: Vec<String>, tiers: Vec<Tier>, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); labels.len()];
        for e in &edges {
            adjacency[e.u].push(e.v);
            adjacency[e.v].push(e.u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            id,
            labels,
            tiers,
            edges,
            adjacency,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Same graph under a different identifier.
    pub fn with_id(&self, id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..self.clone()
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn tiers(&self) -> &[Tier] {
        &self.tiers
    }

    /// Edges in canonical `(u, v)` order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_weight(a, b).is_some()
    }

    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let key = (a.min(b), a.max(b));
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&key))
            .ok()
            .map(|i| self.edges[i].w)
    }

    /// Weight given to edges added by a perturbation: the mean existing
    /// edge weight, or 1.0 for an edgeless graph.
    pub fn added_edge_weight(&self) -> f64 {
        if self.edges.is_empty() {
            1.0
        } else {
            self.edges.iter().map(|e| e.w).sum::<f64>() / self.edges.len() as f64
        }
    }

    /// Structural equality ignoring the identifier.
    pub fn same_content(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.tiers == other.tiers
            && self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .zip(&other.edges)
                .all(|(a, b)| a.u == b.u && a.v == b.v && a.w.to_bits() == b.w.to_bits())
    }

    /// Unordered pairs present in exactly one of the two edge sets.
    pub fn edge_symmetric_difference(&self, other: &Self) -> usize {
        let a: BTreeSet<(usize, usize)> = self.edges.iter().map(|e| (e.u, e.v)).collect();
        let b: BTreeSet<(usize, usize)> = other.edges.iter().map(|e| (e.u, e.v)).collect();
        a.symmetric_difference(&b).count()
    }

    /// Returns a new graph with `flips` applied in order.
    pub fn apply_flips(&self, flips: &[EdgeFlip]) -> Result<Self> {
        let mut edges = self.edges.clone();
        for flip in flips {
            let key = (flip.u, flip.v);
            if flip.u >= flip.v || flip.v >= self.node_count() {
                return Err(GraphError::InapplicableFlip {
                    u: flip.u,
                    v: flip.v,
                    direction: flip.direction,
                });
            }
            match (edges.binary_search_by(|e| (e.u, e.v).cmp(&key)), flip.direction) {
                (Err(pos), FlipDirection::Add) => edges.insert(
                    pos,
                    Edge {
                        u: flip.u,
                        v: flip.v,
                        w: flip.weight,
                    },
                ),
                (Ok(pos), FlipDirection::Remove) => {
                    edges.remove(pos);
                }
                _ => {
                    return Err(GraphError::InapplicableFlip {
                        u: flip.u,
                        v: flip.v,
                        direction: flip.direction,
                    })
                }
            }
        }
        Ok(Self::from_canonical(
            self.id.clone(),
            self.labels.clone(),
            self.tiers.clone(),
            edges,
        ))
    }

    /// Content digest of the graph. The identifier is not part of the digest.
    pub fn digest(&self) -> GraphDigest {
        let mut h = Sha256::new();
        h.update((self.labels.len() as u64).to_le_bytes());
        for (label, tier) in self.labels.iter().zip(&self.tiers) {
            h.update((label.len() as u64).to_le_bytes());
            h.update(label.as_bytes());
            h.update([*tier as u8]);
        }
        h.update((self.edges.len() as u64).to_le_bytes());
        for e in &self.edges {
            h.update((e.u as u64).to_le_bytes());
            h.update((e.v as u64).to_le_bytes());
            h.update(e.w.to_bits().to_le_bytes());
        }
        GraphDigest(h.finalize().into())
    }

    /// Relabels nodes so that old node `v` becomes node `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        if perm.len() != n || perm.iter().collect::<BTreeSet<_>>().len() != n || perm.iter().any(|&p| p >= n) {
            return Err(GraphError::Invalid("not a permutation of the node set".into()));
        }
        let mut labels = vec![String::new(); n];
        let mut tiers = vec![Tier::Object; n];
        for v in 0..n {
            labels[perm[v]] = self.labels[v].clone();
            tiers[perm[v]] = self.tiers[v];
        }
        Self::new(
            self.id.clone(),
            labels,
            tiers,
            self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.w)),
        )
    }
}

/// Content digest used to deduplicate queried graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphDigest(pub [u8; 32]);

impl fmt::Display for GraphDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl Serialize for GraphDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for GraphDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.len() != 64 {
            return Err(serde::de::Error::custom("digest must be 64 hex characters"));
        }
        let mut out = [0u8; 32];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(serde::de::Error::custom)?;
        }
        Ok(GraphDigest(out))
    }
}

pub fn graph_hash(g: &LabeledGraph) -> GraphDigest {
    g.digest()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlipDirection {
    Add,
    Remove,
}

impl fmt::Display for FlipDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlipDirection::Add => "add",
            FlipDirection::Remove => "remove",
        })
    }
}

/// Toggle of one unordered node pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFlip {
    pub u: usize,
    pub v: usize,
    pub direction: FlipDirection,
    /// Weight of the new edge; ignored for removals.
    pub weight: f64,
}

impl EdgeFlip {
    pub fn add(a: usize, b: usize, weight: f64) -> Self {
        Self {
            u: a.min(b),
            v: a.max(b),
            direction: FlipDirection::Add,
            weight,
        }
    }

    pub fn remove(a: usize, b: usize) -> Self {
        Self {
            u: a.min(b),
            v: a.max(b),
            direction: FlipDirection::Remove,
            weight: 0.0,
        }
    }

    /// The flip that toggles `(a, b)` in `g`: remove if present, add otherwise.
    pub fn toggle(g: &LabeledGraph, a: usize, b: usize) -> Self {
        if g.has_edge(a, b) {
            Self::remove(a, b)
        } else {
            Self::add(a, b, g.added_edge_weight())
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.u, self.v)
    }
}

pub fn apply_flips(g: &LabeledGraph, flips: &[EdgeFlip]) -> Result<LabeledGraph> {
    g.apply_flips(flips)
}

/// Binary class label: loop closure (+1) or not (-1). Serialized as the
/// integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum ClassLabel {
    Loop,
    NonLoop,
}

impl ClassLabel {
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::Loop => 1.0,
            ClassLabel::NonLoop => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            ClassLabel::Loop => 1,
            ClassLabel::NonLoop => -1,
        }
    }

    pub fn from_i64(y: i64) -> Option<Self> {
        match y {
            1 => Some(ClassLabel::Loop),
            -1 => Some(ClassLabel::NonLoop),
            _ => None,
        }
    }

    pub fn from_sign(x: f64) -> Self {
        if x >= 0.0 {
            ClassLabel::Loop
        } else {
            ClassLabel::NonLoop
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ClassLabel::Loop => ClassLabel::NonLoop,
            ClassLabel::NonLoop => ClassLabel::Loop,
        }
    }
}

impl From<ClassLabel> for i8 {
    fn from(l: ClassLabel) -> i8 {
        l.as_i8()
    }
}

impl TryFrom<i8> for ClassLabel {
    type Error = String;

    fn try_from(y: i8) -> std::result::Result<Self, Self::Error> {
        ClassLabel::from_i64(y as i64).ok_or_else(|| format!("class label must be 1 or -1, got {y}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// A list of labeled graphs with their class labels and split tags.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    graphs: Vec<LabeledGraph>,
    labels: Vec<ClassLabel>,
    splits: Vec<Option<Split>>,
    vocabulary: BTreeSet<String>,
}

impl GraphDataset {
    pub fn new(
        graphs: Vec<LabeledGraph>,
        labels: Vec<ClassLabel>,
        splits: Vec<Option<Split>>,
    ) -> Result<Self> {
        if graphs.len() != labels.len() || graphs.len() != splits.len() {
            return Err(GraphError::Invalid(format!(
                "{} graphs, {} labels, {} split tags",
                graphs.len(),
                labels.len(),
                splits.len()
            )));
        }
        let vocabulary = graphs
            .iter()
            .flat_map(|g| g.labels().iter().cloned())
            .collect();
        Ok(Self {
            graphs,
            labels,
            splits,
            vocabulary,
        })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graphs(&self) -> &[LabeledGraph] {
        &self.graphs
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn splits(&self) -> &[Option<Split>] {
        &self.splits
    }

    /// Node-label alphabet over all graphs.
    pub fn label_vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LabeledGraph, ClassLabel)> {
        self.graphs.iter().zip(self.labels.iter().copied())
    }

    /// Graphs tagged with `split`, in file order.
    pub fn subset(&self, split: Split) -> GraphDataset {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.splits[i] == Some(split))
            .collect();
        GraphDataset::new(
            keep.iter().map(|&i| self.graphs[i].clone()).collect(),
            keep.iter().map(|&i| self.labels[i]).collect(),
            keep.iter().map(|&i| self.splits[i]).collect(),
        )
        .expect("subset of a valid dataset is valid")
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let record = GraphRecord::from_graph(&self.graphs[i], self.labels[i], self.splits[i]);
            out.push_str(&serde_json::to_string(&record).expect("graph records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut graphs = Vec::new();
        let mut labels = Vec::new();
        let mut splits = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let record: GraphRecord = serde_json::from_str(raw).map_err(|e| {
                if e.is_data() {
                    GraphError::Schema {
                        line,
                        field: schema_field(&e.to_string()),
                        message: e.to_string(),
                    }
                } else {
                    GraphError::Parse {
                        line,
                        message: e.to_string(),
                    }
                }
            })?;
            let (g, y, split) = record.into_graph(line)?;
            graphs.push(g);
            labels.push(y);
            splits.push(split);
        }
        Self::new(graphs, labels, splits)
    }
}

fn schema_field(msg: &str) -> String {
    // serde_json messages quote the offending field name in backticks.
    msg.split('`').nth(1).unwrap_or("record").to_string()
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<GraphDataset> {
    let path = path.as_ref();
    let io_err = |source| GraphError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(io_err)?);
        text.push('\n');
    }
    GraphDataset::from_jsonl(&text)
}

pub fn write_dataset(ds: &GraphDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| GraphError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    w.write_all(ds.to_jsonl().as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: usize,
    label: String,
    tier: Tier,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    u: usize,
    v: usize,
    w: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    id: String,
    y: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

impl GraphRecord {
    fn from_graph(g: &LabeledGraph, y: ClassLabel, split: Option<Split>) -> Self {
        Self {
            id: g.id.clone(),
            y: y.as_i8() as i64,
            split,
            nodes: g
                .labels
                .iter()
                .zip(&g.tiers)
                .enumerate()
                .map(|(id, (label, tier))| NodeRecord {
                    id,
                    label: label.clone(),
                    tier: *tier,
                })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    u: e.u,
                    v: e.v,
                    w: e.w,
                })
                .collect(),
        }
    }

    fn into_graph(self, line: usize) -> Result<(LabeledGraph, ClassLabel, Option<Split>)> {
        let schema = |field: &str, message: String| GraphError::Schema {
            line,
            field: field.to_string(),
            message,
        };
        let y = ClassLabel::from_i64(self.y)
            .ok_or_else(|| schema("y", format!("label must be 1 or -1, got {}", self.y)))?;
        let mut nodes = self.nodes;
        nodes.sort_by_key(|n| n.id);
        if let Some((i, n)) = nodes.iter().enumerate().find(|(i, n)| n.id != *i) {
            return Err(schema(
                "nodes",
                format!("node ids must be contiguous from 0; expected {i}, found {}", n.id),
            ));
        }
        let n = nodes.len();
        for e in &self.edges {
            if e.u == e.v {
                return Err(GraphError::Parse {
                    line,
                    message: format!("self-loop on node {}", e.u),
                });
            }
            if e.u >= n || e.v >= n {
                return Err(schema(
                    "edges",
                    format!("edge ({}, {}) references a missing node", e.u, e.v),
                ));
            }
            if !e.w.is_finite() || e.w < 0.0 {
                return Err(schema("w", format!("weight must be finite and >= 0, got {}", e.w)));
            }
        }
        let (labels, tiers) = nodes.into_iter().map(|n| (n.label, n.tier)).unzip();
        let g = LabeledGraph::new(
            self.id,
            labels,
            tiers,
            self.edges.into_iter().map(|e| (e.u, e.v, e.w)),
        )
        .map_err(|e| GraphError::Parse {
            line,
            message: e.to_string(),
        })?;
        Ok((g, y, self.split))
    }
}

/// Convenience builder for tests and examples: every node is an object with
/// the same label.
pub fn uniform_graph(n: usize, label: &str, edges: &[(usize, usize)]) -> LabeledGraph {
    LabeledGraph::new(
        "g",
        vec![label.to_string(); n],
        vec![Tier::Object; n],
        edges.iter().map(|&(u, v)| (u, v, 1.0)),
    )
    .expect("valid uniform graph")
}
