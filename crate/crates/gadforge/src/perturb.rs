//! Synthetic anomaly operators and graph injection.
//!
//! Five perturbation operators manufacture labeled pseudo-anomalies:
//!
//! * [`tau1_degree`] — degree boost: attach `max(1, round(alpha * sigma_deg))`
//!   edges to uniformly drawn endpoints.
//! * [`tau2_dissimilar_edge`] — link the target to the most feature-dissimilar
//!   node of a sampled candidate set.
//! * [`tau3_reorganize`] — drop every incident edge and rewire the same number
//!   of edges to uniform endpoints (degree preserved).
//! * [`tau4_feature_swap`] — replace the feature row with the most dissimilar
//!   candidate's row; structure untouched.
//! * [`tau5_feature_noise`] — bump a small random subset of dimensions by
//!   `beta * sigma_i`.
//!
//! [`inject_all`] applies the enabled operators sequentially to disjoint
//! target sets drawn from the unlabeled pool, on an evolving copy of the
//! graph. Degree and feature statistics are taken once from the original
//! graph so operator order never changes perturbation magnitudes. Targets are
//! processed in ascending node-id order within each type, types in fixed
//! order; all draws come from the caller's rng stream, which makes the whole
//! injection a pure function of `(graph, pool, config, rng state)`.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{degree_stats, feature_stats, FeatureStats, Graph, WorkGraph};
use crate::rng::{draw_excluding, sample_without_replacement};

/// Hard cap on perturbed feature dimensions.
const SUBSET_CAP: usize = 5;
/// Fraction of `d` eligible for perturbation before the cap.
const SUBSET_FRAC: f64 = 0.1;
/// Bounded endpoint resampling before falling back to a linear scan.
const RESAMPLE_TRIES: usize = 64;

/// The five synthetic anomaly types, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauKind {
    DegreeBoost,
    DissimilarLink,
    Rewire,
    FeatureSwap,
    FeatureNoise,
}

pub const ALL_TAUS: [TauKind; 5] = [
    TauKind::DegreeBoost,
    TauKind::DissimilarLink,
    TauKind::Rewire,
    TauKind::FeatureSwap,
    TauKind::FeatureNoise,
];

impl TauKind {
    /// Zero-based position in the canonical order.
    pub fn index(self) -> usize {
        ALL_TAUS.iter().position(|t| *t == self).unwrap()
    }
}

impl std::fmt::Display for TauKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            TauKind::DegreeBoost => "degree_boost",
            TauKind::DissimilarLink => "dissimilar_link",
            TauKind::Rewire => "rewire",
            TauKind::FeatureSwap => "feature_swap",
            TauKind::FeatureNoise => "feature_noise",
        };
        f.write_str(name)
    }
}

/// Injection parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbConfig {
    /// Nodes perturbed per anomaly type (`s`).
    pub per_type: usize,
    /// Candidate set size for dissimilarity ranking (`k`).
    pub candidate_pool: usize,
    /// Range of the degree-boost intensity draw.
    pub alpha_range: (f64, f64),
    /// Range of the feature-noise scale draw.
    pub beta_range: (f64, f64),
    /// Per-type enable mask, in canonical order.
    pub enabled: [bool; 5],
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            per_type: 32,
            candidate_pool: 4096,
            alpha_range: (3.0, 5.0),
            beta_range: (3.0, 5.0),
            enabled: [true; 5],
        }
    }
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.per_type < 1 {
            return Err(Error::Config("per_type must be >= 1".into()));
        }
        if self.candidate_pool < 1 {
            return Err(Error::Config("candidate_pool must be >= 1".into()));
        }
        for (name, (lo, hi)) in [("alpha_range", self.alpha_range), ("beta_range", self.beta_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("{name} must satisfy low <= high")));
            }
        }
        Ok(())
    }

    pub fn enabled_kinds(&self) -> Vec<TauKind> {
        ALL_TAUS
            .iter()
            .copied()
            .filter(|t| self.enabled[t.index()])
            .collect()
    }
}

/// Structural change produced for one target node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDelta {
    pub target: u32,
    /// Undirected edges to insert, as (endpoint, target) pairs.
    pub added: Vec<(u32, u32)>,
    /// Undirected edges to remove (rewire only).
    pub removed: Vec<(u32, u32)>,
    /// Candidate set used for dissimilarity ranking, empty otherwise.
    pub candidates: Vec<u32>,
}

/// Feature change produced for one target node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDelta {
    pub target: u32,
    /// Full replacement row (feature swap).
    pub replacement: Option<Vec<f64>>,
    /// Donor whose row was copied, when applicable.
    pub donor: Option<u32>,
    /// Sparse per-dimension updates `(dim, new value)`, ascending dims.
    pub updates: Vec<(usize, f64)>,
    /// Scale factor used for the sparse updates.
    pub beta: Option<f64>,
    /// Candidate set used for dissimilarity ranking, empty otherwise.
    pub candidates: Vec<u32>,
}

/// One perturbed node with whichever delta kind its operator produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodePerturbation {
    pub node: u32,
    pub edge: Option<EdgeDelta>,
    pub feature: Option<FeatureDelta>,
}

/// Everything one anomaly type did during an injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRecord {
    pub kind: TauKind,
    /// Final target set, ascending.
    pub targets: Vec<u32>,
    /// Deltas in application order.
    pub deltas: Vec<NodePerturbation>,
}

/// Ground truth of a full injection: who was perturbed, how, and which
/// control normals each batch later paired them with.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PerturbationLedger {
    pub types: Vec<TypeRecord>,
    /// Control-normal sets per type, recorded when batches are sampled.
    pub controls: Vec<Vec<u32>>,
}

impl PerturbationLedger {
    /// The anomaly type that perturbed `v`, if any.
    pub fn type_of(&self, v: u32) -> Option<TauKind> {
        self.types
            .iter()
            .find(|t| t.targets.binary_search(&v).is_ok())
            .map(|t| t.kind)
    }

    /// Union of all target sets.
    pub fn all_targets(&self) -> BTreeSet<u32> {
        self.types
            .iter()
            .flat_map(|t| t.targets.iter().copied())
            .collect()
    }

    pub fn record_controls(&mut self, controls: Vec<Vec<u32>>) {
        self.controls = controls;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: format!("bad ledger json: {e}"),
        })
    }
}

fn saturation_err(v: u32) -> Error {
    Error::Injection(format!("node {v} is already connected to every other node"))
}

/// Draw an endpoint for a new `(u, v)` edge: uniform over `V \ {v}`, retried
/// on collision, falling back to an ascending scan for a free endpoint.
fn draw_endpoint<R: Rng>(
    w: &WorkGraph,
    v: u32,
    added: &BTreeSet<u32>,
    rng: &mut R,
) -> Option<u32> {
    let n = w.node_count() as u32;
    for _ in 0..RESAMPLE_TRIES {
        let u = draw_excluding(n, v, rng);
        if !w.has_edge(v, u) && !added.contains(&u) {
            return Some(u);
        }
    }
    (0..n).find(|&u| u != v && !w.has_edge(v, u) && !added.contains(&u))
}

fn tau1_with_alpha<R: Rng>(
    w: &WorkGraph,
    v: u32,
    sigma_deg: f64,
    alpha: f64,
    rng: &mut R,
) -> Result<EdgeDelta> {
    let n = w.node_count();
    if n < 2 {
        return Err(Error::Contract("degree boost needs n >= 2".into()));
    }
    let capacity = n - 1 - w.degree(v);
    if capacity == 0 {
        return Err(saturation_err(v));
    }
    let want = ((alpha * sigma_deg).round() as usize).max(1);
    let count = want.min(capacity);
    let mut added = BTreeSet::new();
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        match draw_endpoint(w, v, &added, rng) {
            Some(u) => {
                added.insert(u);
                pairs.push((u, v));
            }
            None => break, // saturated mid-way: clip
        }
    }
    Ok(EdgeDelta { target: v, added: pairs, removed: Vec::new(), candidates: Vec::new() })
}

/// Degree boost: add `max(1, round(alpha * sigma_deg))` edges at `v`,
/// `alpha ~ Uniform(alpha_range)`, endpoints uniform over the other nodes.
pub fn tau1_degree<R: Rng>(
    w: &WorkGraph,
    v: u32,
    sigma_deg: f64,
    alpha_range: (f64, f64),
    rng: &mut R,
) -> Result<EdgeDelta> {
    let alpha = sample_range(alpha_range, rng);
    tau1_with_alpha(w, v, sigma_deg, alpha, rng)
}

fn sample_range<R: Rng>((lo, hi): (f64, f64), rng: &mut R) -> f64 {
    if lo == hi {
        lo
    } else {
        Uniform::new(lo, hi).sample(rng)
    }
}

/// Sample `min(k, n-1)` distinct candidates from `V \ {v}`.
fn sample_candidates<R: Rng>(w: &WorkGraph, v: u32, k: usize, rng: &mut R) -> Vec<u32> {
    let others: Vec<u32> = (0..w.node_count() as u32).filter(|&u| u != v).collect();
    let count = k.min(others.len());
    sample_without_replacement(&others, count, rng)
}

/// Candidates ranked by L2 feature distance from `v`, farthest first,
/// ties broken by smaller node id.
fn rank_by_dissimilarity(w: &WorkGraph, v: u32, candidates: &[u32]) -> Vec<(f64, u32)> {
    let mut ranked: Vec<(f64, u32)> = candidates
        .iter()
        .map(|&u| (w.feature_distance(v, u), u))
        .collect();
    ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    ranked
}

/// Dissimilar link: connect `v` to the most feature-distant candidate,
/// skipping candidates already adjacent.
pub fn tau2_dissimilar_edge<R: Rng>(
    w: &WorkGraph,
    v: u32,
    k: usize,
    rng: &mut R,
) -> Result<EdgeDelta> {
    if w.node_count() < 2 {
        return Err(Error::Contract("dissimilar link needs n >= 2".into()));
    }
    let candidates = sample_candidates(w, v, k, rng);
    let ranked = rank_by_dissimilarity(w, v, &candidates);
    let donor = ranked
        .iter()
        .map(|&(_, u)| u)
        .find(|&u| !w.has_edge(v, u))
        .ok_or_else(|| {
            Error::Injection(format!("node {v}: every candidate is already a neighbor"))
        })?;
    Ok(EdgeDelta {
        target: v,
        added: vec![(donor, v)],
        removed: Vec::new(),
        candidates,
    })
}

/// Rewire: remove every incident edge and add the same number of fresh
/// uniform edges; degree of `v` is preserved exactly.
pub fn tau3_reorganize<R: Rng>(w: &WorkGraph, v: u32, rng: &mut R) -> Result<EdgeDelta> {
    let degree = w.degree(v);
    if degree == 0 {
        return Err(Error::Contract(format!(
            "rewire target {v} is isolated; caller must resample"
        )));
    }
    let removed: Vec<(u32, u32)> = w.neighbors(v).map(|u| (u, v)).collect();
    // Re-adding a removed neighbor by chance is allowed: endpoints are
    // uniform over V \ {v}, only duplicates and self-loops are excluded.
    let probe = w.clone_without_node_edges(v);
    let mut added = BTreeSet::new();
    let mut pairs = Vec::with_capacity(degree);
    for _ in 0..degree {
        let u = draw_endpoint(&probe, v, &added, rng)
            .expect("n-1 >= degree endpoints always available after removal");
        added.insert(u);
        pairs.push((u, v));
    }
    Ok(EdgeDelta { target: v, added: pairs, removed, candidates: Vec::new() })
}

impl WorkGraph {
    /// Copy with all edges at `v` dropped; scratch for rewire endpoint draws.
    fn clone_without_node_edges(&self, v: u32) -> WorkGraph {
        let mut w = self.clone();
        let nbrs: Vec<u32> = w.neighbors(v).collect();
        for u in nbrs {
            w.remove_edge(u, v);
        }
        w
    }
}

/// Feature swap: copy the feature row of the most dissimilar candidate;
/// adjacency untouched.
pub fn tau4_feature_swap<R: Rng>(
    w: &WorkGraph,
    v: u32,
    k: usize,
    rng: &mut R,
) -> Result<FeatureDelta> {
    if w.node_count() < 2 {
        return Err(Error::Contract("feature swap needs n >= 2".into()));
    }
    let candidates = sample_candidates(w, v, k, rng);
    let ranked = rank_by_dissimilarity(w, v, &candidates);
    let donor = ranked[0].1;
    Ok(FeatureDelta {
        target: v,
        replacement: Some(w.feature_row(donor).to_vec()),
        donor: Some(donor),
        updates: Vec::new(),
        beta: None,
        candidates,
    })
}

/// Upper bound of the perturbed-dimension count for feature dim `d`.
pub fn subset_bound(d: usize) -> usize {
    SUBSET_CAP.min((SUBSET_FRAC * d as f64).floor() as usize).max(2)
}

fn tau5_with_draws(
    w: &WorkGraph,
    v: u32,
    stats: &FeatureStats,
    dims: Vec<usize>,
    beta: f64,
) -> FeatureDelta {
    let row = w.feature_row(v);
    let updates = dims
        .iter()
        .map(|&i| (i, row[i] + beta * stats.std[i]))
        .collect();
    FeatureDelta {
        target: v,
        replacement: None,
        donor: None,
        updates,
        beta: Some(beta),
        candidates: Vec::new(),
    }
}

/// Feature noise: raise a few dimensions by `beta * sigma_i`. The subset size
/// is uniform over `[2, max(2, min(5, floor(0.1 d)))]`; `beta ~ Uniform(beta_range)`.
pub fn tau5_feature_noise<R: Rng>(
    w: &WorkGraph,
    v: u32,
    stats: &FeatureStats,
    cfg: &PerturbConfig,
    rng: &mut R,
) -> Result<FeatureDelta> {
    let d = w.feature_dim();
    if d < 2 {
        return Err(Error::Config(format!("feature noise needs d >= 2, got {d}")));
    }
    // Draw order is pinned: subset size, then the subset, then beta.
    let hi = subset_bound(d);
    let size = rng.gen_range(2..=hi);
    let all_dims: Vec<usize> = (0..d).collect();
    let mut dims = sample_without_replacement(&all_dims, size, rng);
    dims.sort_unstable();
    let beta = sample_range(cfg.beta_range, rng);
    Ok(tau5_with_draws(w, v, stats, dims, beta))
}

/// Apply a structural delta to the working graph.
pub fn apply_edge_delta(w: &mut WorkGraph, delta: &EdgeDelta) {
    for &(u, v) in &delta.removed {
        w.remove_edge(u, v);
    }
    for &(u, v) in &delta.added {
        w.add_edge(u, v);
    }
}

/// Apply a feature delta to the working graph.
pub fn apply_feature_delta(w: &mut WorkGraph, delta: &FeatureDelta) {
    if let Some(row) = &delta.replacement {
        w.set_feature_row(delta.target, row);
    }
    for &(dim, value) in &delta.updates {
        w.set_feature(delta.target, dim, value);
    }
}

/// Replace an isolated rewire target with a pool node of positive degree.
fn replace_isolated<R: Rng>(
    w: &WorkGraph,
    pool: &[u32],
    taken: &BTreeSet<u32>,
    rng: &mut R,
) -> Result<u32> {
    for _ in 0..RESAMPLE_TRIES {
        let candidate = pool[rng.gen_range(0..pool.len())];
        if !taken.contains(&candidate) && w.degree(candidate) > 0 {
            return Ok(candidate);
        }
    }
    pool.iter()
        .copied()
        .find(|u| !taken.contains(u) && w.degree(*u) > 0)
        .ok_or_else(|| {
            Error::Injection("no unlabeled node with degree >= 1 available for rewire".into())
        })
}

/// Run every enabled operator over disjoint target sets drawn from `pool`,
/// sequentially on an evolving copy of `g`. Returns the perturbed graph and
/// the ground-truth ledger; `g` itself is untouched.
pub fn inject_all<R: Rng>(
    g: &Graph,
    pool: &[u32],
    cfg: &PerturbConfig,
    rng: &mut R,
) -> Result<(Graph, PerturbationLedger)> {
    cfg.validate()?;
    let kinds = cfg.enabled_kinds();
    let needed = kinds.len() * cfg.per_type;
    if pool.len() < needed {
        return Err(Error::Injection(format!(
            "pool of {} cannot supply {} targets ({} types x {} nodes); needs >= {}",
            pool.len(),
            needed,
            kinds.len(),
            cfg.per_type,
            needed
        )));
    }

    // Statistics are taken once, on the original graph.
    let (_, sigma_deg) = degree_stats(g)?;
    let stats = feature_stats(g)?;

    let drawn = sample_without_replacement(pool, needed, rng);
    let mut target_sets: Vec<Vec<u32>> = drawn
        .chunks(cfg.per_type)
        .map(|c| {
            let mut v = c.to_vec();
            v.sort_unstable();
            v
        })
        .collect();
    let mut taken: BTreeSet<u32> = drawn.iter().copied().collect();

    let mut work = g.to_work();
    let mut records = Vec::with_capacity(kinds.len());
    for (ki, &kind) in kinds.iter().enumerate() {
        let mut deltas = Vec::with_capacity(cfg.per_type);
        let mut final_targets = Vec::with_capacity(cfg.per_type);
        for slot in 0..cfg.per_type {
            let mut v = target_sets[ki][slot];
            if kind == TauKind::Rewire && work.degree(v) == 0 {
                let replacement = replace_isolated(&work, pool, &taken, rng)?;
                taken.remove(&v);
                taken.insert(replacement);
                target_sets[ki][slot] = replacement;
                v = replacement;
            }
            let record = match kind {
                TauKind::DegreeBoost => {
                    let delta = tau1_degree(&work, v, sigma_deg, cfg.alpha_range, rng)?;
                    apply_edge_delta(&mut work, &delta);
                    NodePerturbation { node: v, edge: Some(delta), feature: None }
                }
                TauKind::DissimilarLink => {
                    let delta = tau2_dissimilar_edge(&work, v, cfg.candidate_pool, rng)?;
                    apply_edge_delta(&mut work, &delta);
                    NodePerturbation { node: v, edge: Some(delta), feature: None }
                }
                TauKind::Rewire => {
                    let delta = tau3_reorganize(&work, v, rng)?;
                    apply_edge_delta(&mut work, &delta);
                    NodePerturbation { node: v, edge: Some(delta), feature: None }
                }
                TauKind::FeatureSwap => {
                    let delta = tau4_feature_swap(&work, v, cfg.candidate_pool, rng)?;
                    apply_feature_delta(&mut work, &delta);
                    NodePerturbation { node: v, edge: None, feature: Some(delta) }
                }
                TauKind::FeatureNoise => {
                    let delta = tau5_feature_noise(&work, v, &stats, cfg, rng)?;
                    apply_feature_delta(&mut work, &delta);
                    NodePerturbation { node: v, edge: None, feature: Some(delta) }
                }
            };
            deltas.push(record);
            final_targets.push(v);
        }
        final_targets.sort_unstable();
        records.push(TypeRecord { kind, targets: final_targets, deltas });
    }

    Ok((work.freeze(), PerturbationLedger { types: records, controls: Vec::new() }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamId};

    fn grid_graph(n: usize, d: usize) -> Graph {
        // path graph with simple features
        let features: Vec<f64> = (0..n * d).map(|i| (i % 7) as f64 * 0.5).collect();
        let edges: Vec<(u32, u32)> = (0..n as u32 - 1).map(|v| (v, v + 1)).collect();
        Graph::from_edges(n, d, features, &edges).unwrap()
    }

    #[test]
    fn tau1_forced_alpha_adds_exact_count() {
        let g = grid_graph(40, 2);
        let w = g.to_work();
        let mut rng = stream(1, StreamId::Injection);
        let delta = tau1_with_alpha(&w, 5, 2.5, 4.0, &mut rng).unwrap();
        assert_eq!(delta.added.len(), 10);
        let mut seen = BTreeSet::new();
        for &(u, v) in &delta.added {
            assert_eq!(v, 5);
            assert_ne!(u, 5);
            assert!(!w.has_edge(5, u));
            assert!(seen.insert(u), "duplicate endpoint {u}");
        }
    }

    #[test]
    fn tau1_zero_sigma_adds_one_edge() {
        let g = grid_graph(10, 2);
        let w = g.to_work();
        let mut rng = stream(2, StreamId::Injection);
        let delta = tau1_degree(&w, 3, 0.0, (3.0, 5.0), &mut rng).unwrap();
        assert_eq!(delta.added.len(), 1);
    }

    #[test]
    fn tau1_count_respects_alpha_bounds() {
        let g = grid_graph(60, 2);
        let w = g.to_work();
        let mut rng = stream(3, StreamId::Injection);
        for _ in 0..50 {
            let delta = tau1_degree(&w, 7, 2.0, (3.0, 5.0), &mut rng).unwrap();
            assert!((6..=10).contains(&delta.added.len()), "got {}", delta.added.len());
        }
    }

    #[test]
    fn tau1_saturated_node_errors() {
        // complete graph on 4 nodes
        let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = Graph::from_edges(4, 1, vec![0.0; 4], &edges).unwrap();
        let w = g.to_work();
        let mut rng = stream(4, StreamId::Injection);
        let err = tau1_degree(&w, 0, 1.0, (3.0, 5.0), &mut rng).unwrap_err();
        assert!(matches!(err, Error::Injection(_)));
    }

    fn four_point_graph() -> Graph {
        // node 0 at origin, donors at (1,0), (0,2), (3,4)
        Graph::from_edges(4, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 3.0, 4.0], &[]).unwrap()
    }

    #[test]
    fn tau2_picks_farthest_candidate() {
        let g = four_point_graph();
        let w = g.to_work();
        let mut rng = stream(5, StreamId::Injection);
        let delta = tau2_dissimilar_edge(&w, 0, 4096, &mut rng).unwrap();
        assert_eq!(delta.added, vec![(3, 0)]);
        assert_eq!(delta.candidates.len(), 3);
    }

    #[test]
    fn tau2_tie_breaks_to_smaller_id() {
        // two donors both at distance 5
        let g = Graph::from_edges(3, 2, vec![0.0, 0.0, 3.0, 4.0, 4.0, 3.0], &[]).unwrap();
        let w = g.to_work();
        let mut rng = stream(6, StreamId::Injection);
        let delta = tau2_dissimilar_edge(&w, 0, 4096, &mut rng).unwrap();
        assert_eq!(delta.added, vec![(1, 0)]);
    }

    #[test]
    fn tau2_existing_edge_falls_back_to_next() {
        // farthest donor already adjacent
        let g = Graph::from_edges(4, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 3.0, 4.0], &[(0, 3)])
            .unwrap();
        let w = g.to_work();
        let mut rng = stream(7, StreamId::Injection);
        let delta = tau2_dissimilar_edge(&w, 0, 4096, &mut rng).unwrap();
        assert_eq!(delta.added, vec![(2, 0)]); // next farthest is (0,2) at distance 2
    }

    #[test]
    fn tau2_candidate_count_clamps_to_n_minus_one() {
        let g = grid_graph(10, 2);
        let w = g.to_work();
        let mut rng = stream(8, StreamId::Injection);
        let delta = tau2_dissimilar_edge(&w, 0, 4096, &mut rng).unwrap();
        assert_eq!(delta.candidates.len(), 9);
    }

    #[test]
    fn tau3_preserves_degree_and_edge_total() {
        let g = grid_graph(30, 2);
        let mut w = g.to_work();
        w.add_edge(5, 20);
        w.add_edge(5, 21); // degree(5) = 4
        let before_deg = w.degree(5);
        let total_before: usize = (0..30u32).map(|v| w.degree(v)).sum();
        let mut rng = stream(9, StreamId::Injection);
        let delta = tau3_reorganize(&w, 5, &mut rng).unwrap();
        assert_eq!(delta.removed.len(), before_deg);
        assert_eq!(delta.added.len(), before_deg);
        apply_edge_delta(&mut w, &delta);
        assert_eq!(w.degree(5), before_deg);
        let total_after: usize = (0..30u32).map(|v| w.degree(v)).sum();
        assert_eq!(total_before, total_after);
    }

    #[test]
    fn tau3_full_degree_recovers_all_other_nodes() {
        // star: node 0 connected to all others
        let n = 6u32;
        let edges: Vec<(u32, u32)> = (1..n).map(|v| (0, v)).collect();
        let g = Graph::from_edges(n as usize, 1, vec![0.0; n as usize], &edges).unwrap();
        let mut w = g.to_work();
        let mut rng = stream(10, StreamId::Injection);
        let delta = tau3_reorganize(&w, 0, &mut rng).unwrap();
        apply_edge_delta(&mut w, &delta);
        let nbrs: Vec<u32> = w.neighbors(0).collect();
        assert_eq!(nbrs, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn tau3_isolated_node_is_contract_error() {
        let g = Graph::from_edges(3, 1, vec![0.0; 3], &[(1, 2)]).unwrap();
        let w = g.to_work();
        let mut rng = stream(11, StreamId::Injection);
        assert!(matches!(tau3_reorganize(&w, 0, &mut rng), Err(Error::Contract(_))));
    }

    #[test]
    fn tau4_swaps_row_and_leaves_structure() {
        let g = four_point_graph();
        let w = g.to_work();
        let mut rng = stream(12, StreamId::Injection);
        let delta = tau4_feature_swap(&w, 0, 4096, &mut rng).unwrap();
        assert_eq!(delta.donor, Some(3));
        assert_eq!(delta.replacement.as_deref(), Some(&[3.0, 4.0][..]));
        assert!(delta.updates.is_empty());
    }

    #[test]
    fn tau4_identical_features_swap_is_identity() {
        let g = Graph::from_edges(3, 2, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0], &[]).unwrap();
        let w = g.to_work();
        let mut rng = stream(13, StreamId::Injection);
        let delta = tau4_feature_swap(&w, 1, 4096, &mut rng).unwrap();
        assert_eq!(delta.replacement.as_deref(), Some(&[1.0, 2.0][..]));
        assert_eq!(delta.donor, Some(0)); // all distances 0, smallest id wins
    }

    #[test]
    fn tau5_forced_draws_match_formula() {
        let g = grid_graph(5, 4);
        let w = g.to_work();
        let stats = FeatureStats { mean: vec![0.0; 4], std: vec![0.5, 0.0, 1.0, 2.0] };
        let delta = tau5_with_draws(&w, 2, &stats, vec![0, 1], 3.0);
        let row = w.feature_row(2);
        assert_eq!(delta.updates[0], (0, row[0] + 1.5));
        assert_eq!(delta.updates[1], (1, row[1])); // sigma = 0 leaves value unchanged
        assert_eq!(delta.beta, Some(3.0));
    }

    #[test]
    fn tau5_spec_arithmetic() {
        let g = Graph::from_edges(2, 2, vec![1.0, 1.0, 1.0, 1.0], &[(0, 1)]).unwrap();
        let w = g.to_work();
        let stats = FeatureStats { mean: vec![1.0, 1.0], std: vec![0.5, 0.5] };
        let delta = tau5_with_draws(&w, 0, &stats, vec![0], 3.0);
        assert_eq!(delta.updates, vec![(0, 2.5)]);
    }

    #[test]
    fn tau5_subset_size_forced_to_two_for_d20() {
        assert_eq!(subset_bound(20), 2);
        assert_eq!(subset_bound(16), 2);
        assert_eq!(subset_bound(40), 4);
        assert_eq!(subset_bound(50), 5);
        assert_eq!(subset_bound(500), 5);
        assert_eq!(subset_bound(2), 2);
        let g = grid_graph(6, 20);
        let w = g.to_work();
        let stats = feature_stats(&g).unwrap();
        let cfg = PerturbConfig::default();
        let mut rng = stream(14, StreamId::Injection);
        for _ in 0..20 {
            let delta = tau5_feature_noise(&w, 1, &stats, &cfg, &mut rng).unwrap();
            assert_eq!(delta.updates.len(), 2);
        }
    }

    #[test]
    fn tau5_rejects_d_below_two() {
        let g = grid_graph(6, 1);
        let w = g.to_work();
        let stats = feature_stats(&g).unwrap();
        let cfg = PerturbConfig::default();
        let mut rng = stream(15, StreamId::Injection);
        assert!(matches!(
            tau5_feature_noise(&w, 0, &stats, &cfg, &mut rng),
            Err(Error::Config(_))
        ));
    }

    fn ring_graph(n: usize, d: usize) -> Graph {
        let features: Vec<f64> = (0..n * d).map(|i| ((i * 31 % 17) as f64) * 0.25).collect();
        let edges: Vec<(u32, u32)> = (0..n as u32).map(|v| (v, (v + 1) % n as u32)).collect();
        Graph::from_edges(n, d, features, &edges).unwrap()
    }

    #[test]
    fn inject_all_produces_disjoint_full_sets() {
        let g = ring_graph(400, 8);
        let pool: Vec<u32> = (0..400).collect();
        let cfg = PerturbConfig { per_type: 32, ..Default::default() };
        let mut rng = stream(16, StreamId::Injection);
        let (g2, ledger) = inject_all(&g, &pool, &cfg, &mut rng).unwrap();
        assert_eq!(ledger.types.len(), 5);
        let all = ledger.all_targets();
        assert_eq!(all.len(), 160, "targets must be pairwise disjoint");
        for t in &ledger.types {
            assert_eq!(t.targets.len(), 32);
        }
        crate::graph::validate_graph(&g2).unwrap();
        // original untouched
        assert_eq!(g.edge_count(), 400);
    }

    #[test]
    fn inject_all_pool_too_small_names_requirement() {
        let g = ring_graph(20, 4);
        let pool: Vec<u32> = (0..9).collect();
        let cfg = PerturbConfig { per_type: 2, ..Default::default() };
        let mut rng = stream(17, StreamId::Injection);
        let err = inject_all(&g, &pool, &cfg, &mut rng).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(">= 10"), "message should name required size: {msg}");
    }

    #[test]
    fn inject_all_is_deterministic() {
        let g = ring_graph(300, 6);
        let pool: Vec<u32> = (0..300).collect();
        let cfg = PerturbConfig { per_type: 8, ..Default::default() };
        let mut r1 = stream(99, StreamId::Injection);
        let mut r2 = stream(99, StreamId::Injection);
        let (ga, la) = inject_all(&g, &pool, &cfg, &mut r1).unwrap();
        let (gb, lb) = inject_all(&g, &pool, &cfg, &mut r2).unwrap();
        assert_eq!(la, lb);
        assert_eq!(la.to_json(), lb.to_json());
        assert_eq!(ga, gb);
    }

    #[test]
    fn inject_all_respects_type_mask() {
        let g = ring_graph(100, 6);
        let pool: Vec<u32> = (0..100).collect();
        let mut cfg = PerturbConfig { per_type: 4, ..Default::default() };
        cfg.enabled = [true, false, true, false, true];
        let mut rng = stream(5, StreamId::Injection);
        let (_, ledger) = inject_all(&g, &pool, &cfg, &mut rng).unwrap();
        let kinds: Vec<TauKind> = ledger.types.iter().map(|t| t.kind).collect();
        assert_eq!(kinds, vec![TauKind::DegreeBoost, TauKind::Rewire, TauKind::FeatureNoise]);
    }

    #[test]
    fn ledger_json_round_trip() {
        let g = ring_graph(100, 6);
        let pool: Vec<u32> = (0..100).collect();
        let cfg = PerturbConfig { per_type: 3, ..Default::default() };
        let mut rng = stream(21, StreamId::Injection);
        let (_, ledger) = inject_all(&g, &pool, &cfg, &mut rng).unwrap();
        let parsed = PerturbationLedger::from_json(&ledger.to_json()).unwrap();
        assert_eq!(parsed, ledger);
    }

    #[test]
    fn non_targets_keep_their_features_and_far_edges() {
        let g = ring_graph(200, 6);
        let pool: Vec<u32> = (0..200).collect();
        let cfg = PerturbConfig { per_type: 6, ..Default::default() };
        let mut rng = stream(31, StreamId::Injection);
        let (g2, ledger) = inject_all(&g, &pool, &cfg, &mut rng).unwrap();
        let targets = ledger.all_targets();
        let structural: BTreeSet<u32> = ledger
            .types
            .iter()
            .filter(|t| {
                matches!(t.kind, TauKind::DegreeBoost | TauKind::DissimilarLink | TauKind::Rewire)
            })
            .flat_map(|t| t.targets.iter().copied())
            .collect();
        for v in 0..200u32 {
            if !targets.contains(&v) {
                assert_eq!(g.feature_row(v), g2.feature_row(v), "feature drift at {v}");
                let before: BTreeSet<u32> = g.neighbors(v).iter().copied().collect();
                let after: BTreeSet<u32> = g2.neighbors(v).iter().copied().collect();
                for moved in before.symmetric_difference(&after) {
                    assert!(
                        structural.contains(moved),
                        "edge churn at {v} involves non-target {moved}"
                    );
                }
            }
        }
    }
}
