//! Planted benchmark generator.
//!
//! Produces a stochastic-block-model graph with community-clustered Gaussian
//! features, then plants ground-truth anomalies by applying the perturbation
//! operators to a random node subset. Planting draws from a stream disjoint
//! from training-time injection, so a model trained on the result never sees
//! the same random decisions that created its targets.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degree_stats, feature_stats, Graph, Label, LabelSet};
use crate::perturb::{
    apply_edge_delta, apply_feature_delta, tau1_degree, tau2_dissimilar_edge, tau3_reorganize,
    tau4_feature_swap, tau5_feature_noise, PerturbConfig, TauKind, ALL_TAUS,
};
use crate::rng::{sample_without_replacement, stream, StreamId};

/// Benchmark geometry and planting recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub communities: usize,
    pub nodes_per_community: usize,
    pub p_intra: f64,
    pub p_inter: f64,
    pub feature_dim: usize,
    /// Std of the per-community Gaussian feature means.
    pub community_spread: f64,
    /// Std of per-node noise around the community mean.
    pub feature_noise: f64,
    /// Fraction of nodes turned into planted anomalies.
    pub anomaly_fraction: f64,
    /// Which transforms to plant, assigned round-robin over the targets.
    pub recipe: Vec<TauKind>,
    /// Operator parameters used for planting (candidate pool, alpha/beta).
    pub plant: PerturbConfig,
    /// How many dissimilar links a planted connection anomaly receives. The
    /// training-time operator always adds one; planted anomalies repeat it so
    /// the ground truth is detectable at benchmark scale.
    pub plant_dissimilar_edges: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            communities: 4,
            nodes_per_community: 250,
            p_intra: 0.02,
            p_inter: 0.001,
            feature_dim: 16,
            community_spread: 1.0,
            feature_noise: 0.5,
            anomaly_fraction: 0.05,
            recipe: ALL_TAUS.to_vec(),
            plant: PerturbConfig::default(),
            plant_dissimilar_edges: 3,
        }
    }
}

impl BenchmarkConfig {
    pub fn node_count(&self) -> usize {
        self.communities * self.nodes_per_community
    }

    pub fn validate(&self) -> Result<()> {
        if self.communities < 1 || self.nodes_per_community < 1 {
            return Err(Error::Config("benchmark needs >= 1 community and >= 1 node each".into()));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0,1], got {p}")));
            }
        }
        if !(0.0..=0.5).contains(&self.anomaly_fraction) {
            return Err(Error::Config(format!(
                "anomaly_fraction must be in [0, 0.5], got {}",
                self.anomaly_fraction
            )));
        }
        if self.recipe.is_empty() && self.anomaly_fraction > 0.0 {
            return Err(Error::Config("anomaly recipe is empty".into()));
        }
        if self.plant_dissimilar_edges < 1 {
            return Err(Error::Config("plant_dissimilar_edges must be >= 1".into()));
        }
        if self.feature_dim < 2 && self.recipe.contains(&TauKind::FeatureNoise) {
            return Err(Error::Config("feature_noise planting needs feature_dim >= 2".into()));
        }
        if !(self.community_spread >= 0.0 && self.feature_noise >= 0.0) {
            return Err(Error::Config("feature scales must be nonnegative".into()));
        }
        self.plant.validate()
    }
}

/// Generate the benchmark graph and its full ground-truth labels.
///
/// Deterministic in `(cfg, seed)`: structure and features come from the
/// benchmark-graph stream, planting from the benchmark-plant stream.
pub fn gen_benchmark(cfg: &BenchmarkConfig, seed: u64) -> Result<(Graph, LabelSet)> {
    cfg.validate()?;
    let n = cfg.node_count();
    let d = cfg.feature_dim;
    let mut g_rng = stream(seed, StreamId::BenchmarkGraph);

    // community feature means, then per-node noise
    let mean_dist = Normal::new(0.0, cfg.community_spread.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;
    let noise_dist = Normal::new(0.0, cfg.feature_noise.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut means = vec![0.0; cfg.communities * d];
    for m in &mut means {
        *m = if cfg.community_spread > 0.0 { mean_dist.sample(&mut g_rng) } else { 0.0 };
    }
    let mut features = Vec::with_capacity(n * d);
    for v in 0..n {
        let c = v / cfg.nodes_per_community;
        for i in 0..d {
            let noise = if cfg.feature_noise > 0.0 { noise_dist.sample(&mut g_rng) } else { 0.0 };
            features.push(means[c * d + i] + noise);
        }
    }

    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            let same = (u as usize) / cfg.nodes_per_community == (v as usize) / cfg.nodes_per_community;
            let p = if same { cfg.p_intra } else { cfg.p_inter };
            if g_rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let clean = Graph::from_edges(n, d, features, &edges)?;

    let planted = rounded_count(cfg.anomaly_fraction, n);
    if planted == 0 {
        return Ok((clean, LabelSet::new(vec![Label::Normal; n])));
    }

    let mut p_rng = stream(seed, StreamId::BenchmarkPlant);
    let all: Vec<u32> = (0..n as u32).collect();
    let chosen = sample_without_replacement(&all, planted, &mut p_rng);

    // round-robin type assignment over the draw order, then canonical
    // operator order with ascending node ids inside each type
    let mut per_kind: Vec<Vec<u32>> = vec![Vec::new(); ALL_TAUS.len()];
    for (j, &v) in chosen.iter().enumerate() {
        let kind = cfg.recipe[j % cfg.recipe.len()];
        per_kind[kind.index()].push(v);
    }
    for list in &mut per_kind {
        list.sort_unstable();
    }

    let (_, sigma_deg) = degree_stats(&clean)?;
    let stats = feature_stats(&clean)?;
    let target_set: std::collections::BTreeSet<u32> = chosen.iter().copied().collect();
    let mut labels = vec![Label::Normal; n];
    let mut work = clean.to_work();
    for kind in ALL_TAUS {
        for idx in 0..per_kind[kind.index()].len() {
            let mut v = per_kind[kind.index()][idx];
            if kind == TauKind::Rewire && work.degree(v) == 0 {
                // swap an isolated rewire target for a connected non-target
                let replacement = (0..n as u32)
                    .find(|u| !target_set.contains(u) && work.degree(*u) > 0 && labels[*u as usize] == Label::Normal)
                    .ok_or_else(|| Error::Injection("no connected node available for planted rewire".into()))?;
                per_kind[kind.index()][idx] = replacement;
                v = replacement;
            }
            match kind {
                TauKind::DegreeBoost => {
                    let delta = tau1_degree(&work, v, sigma_deg, cfg.plant.alpha_range, &mut p_rng)?;
                    apply_edge_delta(&mut work, &delta);
                }
                TauKind::DissimilarLink => {
                    for _ in 0..cfg.plant_dissimilar_edges {
                        let delta =
                            tau2_dissimilar_edge(&work, v, cfg.plant.candidate_pool, &mut p_rng)?;
                        apply_edge_delta(&mut work, &delta);
                    }
                }
                TauKind::Rewire => {
                    let delta = tau3_reorganize(&work, v, &mut p_rng)?;
                    apply_edge_delta(&mut work, &delta);
                }
                TauKind::FeatureSwap => {
                    let delta = tau4_feature_swap(&work, v, cfg.plant.candidate_pool, &mut p_rng)?;
                    apply_feature_delta(&mut work, &delta);
                }
                TauKind::FeatureNoise => {
                    let delta = tau5_feature_noise(&work, v, &stats, &cfg.plant, &mut p_rng)?;
                    apply_feature_delta(&mut work, &delta);
                }
            }
            labels[v as usize] = Label::Anomaly;
        }
    }

    Ok((work.freeze(), LabelSet::new(labels)))
}

fn rounded_count(fraction: f64, n: usize) -> usize {
    (fraction * n as f64).round() as usize
}
