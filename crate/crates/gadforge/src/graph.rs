//! Attributed-graph storage and statistics.
//!
//! [`Graph`] is an immutable CSR view of an undirected simple graph with a
//! dense feature matrix. [`WorkGraph`] is its mutable counterpart used while
//! edges and features are being perturbed; `freeze` converts back to CSR.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Per-node label state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Unlabeled,
    Normal,
    Anomaly,
}

impl Label {
    /// Token used by the text dataset format: -1 / 0 / 1.
    pub fn token(self) -> i8 {
        match self {
            Label::Unlabeled => -1,
            Label::Normal => 0,
            Label::Anomaly => 1,
        }
    }

    pub fn from_token(tok: i64) -> Option<Self> {
        match tok {
            -1 => Some(Label::Unlabeled),
            0 => Some(Label::Normal),
            1 => Some(Label::Anomaly),
            _ => None,
        }
    }
}

/// Node labels for a graph; `labeled()` is the observed set M, the rest is U.
#[derive(Debug, Clone)]
pub struct LabelSet {
    labels: Vec<Label>,
}

impl LabelSet {
    pub fn new(labels: Vec<Label>) -> Self {
        Self { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, v: u32) -> Label {
        self.labels[v as usize]
    }

    /// Node ids with an observed label (the set M).
    pub fn labeled(&self) -> Vec<u32> {
        (0..self.labels.len() as u32)
            .filter(|&v| self.labels[v as usize] != Label::Unlabeled)
            .collect()
    }

    /// Node ids without an observed label (U = V \ M).
    pub fn unlabeled(&self) -> Vec<u32> {
        (0..self.labels.len() as u32)
            .filter(|&v| self.labels[v as usize] == Label::Unlabeled)
            .collect()
    }

    pub fn anomalies(&self) -> Vec<u32> {
        (0..self.labels.len() as u32)
            .filter(|&v| self.labels[v as usize] == Label::Anomaly)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        self.labels.iter().copied()
    }
}

/// Immutable attributed graph in CSR form.
///
/// Invariants (enforced by the constructors): adjacency is symmetric, has no
/// self-loops and no duplicate edges; neighbor lists are sorted ascending;
/// the feature matrix is `n x d` with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    d: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    features: Vec<f64>,
    edge_count: usize,
}

impl Graph {
    /// Build from an edge list; symmetrizes and deduplicates.
    ///
    /// `features` is row-major `n x d`. Self-loops are rejected.
    pub fn from_edges(n: usize, d: usize, features: Vec<f64>, edges: &[(u32, u32)]) -> Result<Self> {
        if features.len() != n * d {
            return Err(Error::Contract(format!(
                "feature matrix has {} entries, expected {}x{}",
                features.len(),
                n,
                d
            )));
        }
        if let Some(bad) = features.iter().find(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite feature value {bad}")));
        }
        let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::Contract(format!("self-loop at node {u}")));
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::Contract(format!("edge ({u},{v}) out of range for n={n}")));
            }
            adj[u as usize].insert(v);
            adj[v as usize].insert(u);
        }
        Ok(Self::from_adj(d, features, adj))
    }

    pub(crate) fn from_adj(d: usize, features: Vec<f64>, adj: Vec<BTreeSet<u32>>) -> Self {
        let n = adj.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for set in &adj {
            neighbors.extend(set.iter().copied());
            offsets.push(neighbors.len());
        }
        let edge_count = neighbors.len() / 2;
        Self { n, d, offsets, neighbors, features, edge_count }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn feature_dim(&self) -> usize {
        self.d
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.offsets[v as usize + 1] - self.offsets[v as usize]
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Feature row of `v`.
    pub fn feature_row(&self, v: u32) -> &[f64] {
        &self.features[v as usize * self.d..(v as usize + 1) * self.d]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// CSR slot range of `v`, for edge-aligned scratch arrays.
    pub fn slot_range(&self, v: u32) -> std::ops::Range<usize> {
        self.offsets[v as usize]..self.offsets[v as usize + 1]
    }

    pub fn total_slots(&self) -> usize {
        self.neighbors.len()
    }

    /// Canonical undirected edge list with `u < v`, ascending.
    pub fn edge_list(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in 0..self.n as u32 {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn to_work(&self) -> WorkGraph {
        let adj = (0..self.n as u32)
            .map(|v| self.neighbors(v).iter().copied().collect())
            .collect();
        WorkGraph { n: self.n, d: self.d, adj, features: self.features.clone() }
    }

    /// L2 distance between the feature rows of `u` and `v`.
    pub fn feature_distance(&self, u: u32, v: u32) -> f64 {
        l2_distance(self.feature_row(u), self.feature_row(v))
    }
}

pub(crate) fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mutable attributed graph used while perturbations are applied.
#[derive(Debug, Clone)]
pub struct WorkGraph {
    n: usize,
    d: usize,
    adj: Vec<BTreeSet<u32>>,
    features: Vec<f64>,
}

impl WorkGraph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn feature_dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adj[u as usize].contains(&v)
    }

    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.adj[v as usize].iter().copied()
    }

    pub fn feature_row(&self, v: u32) -> &[f64] {
        &self.features[v as usize * self.d..(v as usize + 1) * self.d]
    }

    pub fn feature_distance(&self, u: u32, v: u32) -> f64 {
        l2_distance(self.feature_row(u), self.feature_row(v))
    }

    pub fn add_edge(&mut self, u: u32, v: u32) {
        debug_assert_ne!(u, v, "self-loop");
        self.adj[u as usize].insert(v);
        self.adj[v as usize].insert(u);
    }

    pub fn remove_edge(&mut self, u: u32, v: u32) {
        self.adj[u as usize].remove(&v);
        self.adj[v as usize].remove(&u);
    }

    pub fn set_feature(&mut self, v: u32, dim: usize, value: f64) {
        self.features[v as usize * self.d + dim] = value;
    }

    pub fn set_feature_row(&mut self, v: u32, row: &[f64]) {
        debug_assert_eq!(row.len(), self.d);
        self.features[v as usize * self.d..(v as usize + 1) * self.d].copy_from_slice(row);
    }

    pub fn freeze(self) -> Graph {
        Graph::from_adj(self.d, self.features, self.adj)
    }
}

/// Per-dimension feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Mean and population standard deviation of node degrees.
pub fn degree_stats(g: &Graph) -> Result<(f64, f64)> {
    if g.node_count() == 0 {
        return Err(Error::Contract("degree_stats on empty graph".into()));
    }
    let n = g.node_count() as f64;
    let degrees: Vec<f64> = (0..g.node_count() as u32).map(|v| g.degree(v) as f64).collect();
    let mean = degrees.iter().sum::<f64>() / n;
    let var = degrees.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Per-dimension mean and population (1/n) standard deviation of features.
pub fn feature_stats(g: &Graph) -> Result<FeatureStats> {
    if g.node_count() == 0 {
        return Err(Error::Contract("feature_stats on empty graph".into()));
    }
    let n = g.node_count() as f64;
    let d = g.feature_dim();
    let mut mean = vec![0.0; d];
    for v in 0..g.node_count() as u32 {
        for (i, x) in g.feature_row(v).iter().enumerate() {
            mean[i] += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; d];
    for v in 0..g.node_count() as u32 {
        for (i, x) in g.feature_row(v).iter().enumerate() {
            let dx = x - mean[i];
            var[i] += dx * dx;
        }
    }
    let std = var.iter().map(|s| (s / n).sqrt()).collect();
    Ok(FeatureStats { mean, std })
}

/// Optional preprocessing: per-dimension z-score, off by default. Dimensions
/// with zero variance become all-zero.
pub fn zscore_features(g: &Graph) -> Result<Graph> {
    let stats = feature_stats(g)?;
    let d = g.feature_dim();
    let mut features = Vec::with_capacity(g.node_count() * d);
    for v in 0..g.node_count() as u32 {
        for (i, x) in g.feature_row(v).iter().enumerate() {
            features.push(if stats.std[i] > 0.0 { (x - stats.mean[i]) / stats.std[i] } else { 0.0 });
        }
    }
    let adj = (0..g.node_count() as u32)
        .map(|v| g.neighbors(v).iter().copied().collect())
        .collect();
    Ok(Graph::from_adj(d, features, adj))
}

/// Exhaustive structural validation: symmetry, no self-loops, no duplicates.
pub fn validate_graph(g: &Graph) -> Result<()> {
    for u in 0..g.node_count() as u32 {
        let nbrs = g.neighbors(u);
        for w in nbrs.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Contract(format!("duplicate edge ({u},{})", w[0])));
            }
        }
        for &v in nbrs {
            if v == u {
                return Err(Error::Contract(format!("self-loop at {u}")));
            }
            if !g.has_edge(v, u) {
                return Err(Error::Contract(format!("asymmetric edge ({u},{v})")));
            }
        }
    }
    Ok(())
}
