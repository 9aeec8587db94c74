//! Batch construction and the joint objective.
//!
//! The synthetic task trains per-type heads on balanced batches (each
//! perturbed set paired with fresh control normals from the unlabeled pool);
//! the real task trains the scoring head on balanced batches of labeled
//! anomalies versus unlabeled nodes treated as normal. The joint gradient is
//! `grad(L_real) + weight * grad(L_synth)` with both forward passes sharing
//! the encoder parameters: the real pass runs on the clean graph, the
//! synthetic pass on the perturbed one.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::nn::{
    bce, bce_with_grad, encode_with_cache, encoder_backward, finite_diff_report, head_backward,
    head_forward, GradCheckReport, GradSet, Mat, ModelDims, ModelParams, ParamSet, Real,
};
use crate::perturb::{inject_all, PerturbConfig, PerturbationLedger, TauKind};
use crate::rng::{sample_without_replacement, stream, StreamId, StreamRng};

/// Balanced batch for one synthetic anomaly type: the perturbed targets plus
/// an equal number of control normals.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthBatch {
    pub kind: TauKind,
    /// Index of the head this batch trains (0 for the shared-head variant).
    pub head: usize,
    pub nodes: Vec<u32>,
    pub labels: Vec<bool>,
    /// The control-normal half, recorded for the audit ledger.
    pub controls: Vec<u32>,
}

/// Balanced supervised batch: labeled anomalies (drawn with replacement)
/// versus unlabeled-pool nodes treated as normal.
#[derive(Debug, Clone, PartialEq)]
pub struct RealBatch {
    pub nodes: Vec<u32>,
    pub labels: Vec<bool>,
}

/// Pair each perturbed set with `|targets|` fresh control normals drawn from
/// the pool minus every target set. Control sets may repeat across types but
/// never contain a perturbed or labeled node.
pub fn sample_synth_batches(
    ledger: &PerturbationLedger,
    pool: &[u32],
    single_head: bool,
    rng: &mut impl Rng,
) -> Result<Vec<SynthBatch>> {
    let per_type: usize = ledger.types.iter().map(|t| t.targets.len()).max().unwrap_or(0);
    let need = 2 * ledger.types.len() * per_type;
    if pool.len() < need {
        return Err(Error::Contract(format!(
            "unlabeled pool of {} cannot balance {} synthetic batches (needs >= {need})",
            pool.len(),
            ledger.types.len()
        )));
    }
    let targets = ledger.all_targets();
    let eligible: Vec<u32> = pool.iter().copied().filter(|v| !targets.contains(v)).collect();
    let mut batches = Vec::with_capacity(ledger.types.len());
    for (k, record) in ledger.types.iter().enumerate() {
        let s = record.targets.len();
        if eligible.len() < s {
            return Err(Error::Contract(format!(
                "only {} control candidates for a batch of {s} positives",
                eligible.len()
            )));
        }
        let controls = sample_without_replacement(&eligible, s, rng);
        let mut nodes = record.targets.clone();
        nodes.extend(&controls);
        let mut labels = vec![true; s];
        labels.extend(std::iter::repeat(false).take(s));
        batches.push(SynthBatch {
            kind: record.kind,
            head: if single_head { 0 } else { k },
            nodes,
            labels,
            controls,
        });
    }
    Ok(batches)
}

/// Balanced real batch of `batch_size` nodes: half anomaly draws with
/// replacement from the labeled set, half pool draws (without replacement
/// while the pool lasts) labeled normal.
pub fn sample_real_batch(
    labeled_anomalies: &[u32],
    pool: &[u32],
    batch_size: usize,
    rng: &mut impl Rng,
) -> Result<RealBatch> {
    if labeled_anomalies.is_empty() {
        return Err(Error::Config(
            "no labeled anomalies available; run the warm-up-only regime instead".into(),
        ));
    }
    if batch_size < 2 || batch_size % 2 != 0 {
        return Err(Error::Config(format!("real batch size must be even and >= 2, got {batch_size}")));
    }
    if pool.is_empty() {
        return Err(Error::Contract("empty unlabeled pool".into()));
    }
    let half = batch_size / 2;
    let mut nodes = Vec::with_capacity(batch_size);
    for _ in 0..half {
        nodes.push(labeled_anomalies[rng.gen_range(0..labeled_anomalies.len())]);
    }
    if pool.len() >= half {
        nodes.extend(sample_without_replacement(pool, half, rng));
    } else {
        for _ in 0..half {
            nodes.push(pool[rng.gen_range(0..pool.len())]);
        }
    }
    let mut labels = vec![true; half];
    labels.extend(std::iter::repeat(false).take(half));
    Ok(RealBatch { nodes, labels })
}

/// Sum of per-type BCE losses over the perturbed-graph embeddings.
pub fn synth_loss<T: Real>(
    params: &ParamSet<T>,
    perturbed: &Graph,
    batches: &[SynthBatch],
) -> Result<T> {
    let h = crate::nn::encode(perturbed, params);
    let mut total = T::zero();
    for batch in batches {
        let cache = head_forward(&params.synth_heads[batch.head], &h, &batch.nodes);
        total += bce(&cache.probs, &batch.labels)?;
    }
    Ok(total)
}

/// BCE of the scoring head over the clean-graph embeddings.
pub fn real_loss<T: Real>(params: &ParamSet<T>, g: &Graph, batch: &RealBatch) -> Result<T> {
    let h = crate::nn::encode(g, params);
    let cache = head_forward(&params.real_head, &h, &batch.nodes);
    bce(&cache.probs, &batch.labels)
}

/// Joint objective: `L_real + lambda * L_synth`.
pub fn total_loss<T: Real>(l_real: T, l_synth: T, lambda: f64) -> T {
    l_real + T::from_f64(lambda) * l_synth
}

/// Losses plus the gradient of `L_real + synth_weight * L_synth`.
#[derive(Debug)]
pub struct GradComputation<T> {
    pub l_real: Option<T>,
    pub l_synth: Option<T>,
    pub grads: GradSet<T>,
}

/// One backward pass over the requested batch composition.
///
/// The synthetic side is scaled by `synth_weight` (lambda in the full phase,
/// 1 during warm-up). A weight of exactly zero skips the synthetic backward
/// pass: the contribution is identically zero, and skipping it keeps a
/// `lambda = 0` run bit-identical to a regularizer-off run.
pub fn losses_and_grads<T: Real>(
    params: &ParamSet<T>,
    real: Option<(&Graph, &RealBatch)>,
    synth: Option<(&Graph, &[SynthBatch])>,
    synth_weight: f64,
) -> Result<GradComputation<T>> {
    let dims = params.dims();
    let mut grads = ParamSet::zeros(&dims);
    let mut l_real = None;
    let mut l_synth = None;

    if let Some((g, batch)) = real {
        let cache = encode_with_cache(g, params);
        let head_cache = head_forward(&params.real_head, &cache.output, &batch.nodes);
        let (loss, d_logits) = bce_with_grad(&head_cache.probs, &batch.labels)?;
        let mut d_h = Mat::zeros(g.node_count(), dims.hidden_dim);
        head_backward(&params.real_head, &head_cache, &d_logits, &mut grads.real_head, &mut d_h);
        encoder_backward(g, params, &cache, d_h, &mut grads);
        l_real = Some(loss);
    }

    if let Some((perturbed, batches)) = synth {
        let weight = T::from_f64(synth_weight);
        let cache = encode_with_cache(perturbed, params);
        let mut total = T::zero();
        let mut d_h = Mat::zeros(perturbed.node_count(), dims.hidden_dim);
        let mut touched = false;
        for batch in batches {
            let head_cache =
                head_forward(&params.synth_heads[batch.head], &cache.output, &batch.nodes);
            let (loss, mut d_logits) = bce_with_grad(&head_cache.probs, &batch.labels)?;
            total += loss;
            if synth_weight != 0.0 {
                for dz in &mut d_logits {
                    *dz *= weight;
                }
                head_backward(
                    &params.synth_heads[batch.head],
                    &head_cache,
                    &d_logits,
                    &mut grads.synth_heads[batch.head],
                    &mut d_h,
                );
                touched = true;
            }
        }
        if touched {
            encoder_backward(perturbed, params, &cache, d_h, &mut grads);
        }
        l_synth = Some(total);
    }

    grads.check_finite()?;
    Ok(GradComputation { l_real, l_synth, grads })
}

/// Real-head probabilities for `nodes` on the clean graph, as f64 scores.
pub fn score_nodes<T: Real>(params: &ParamSet<T>, g: &Graph, nodes: &[u32]) -> Vec<f64> {
    let h = crate::nn::encode(g, params);
    let cache = head_forward(&params.real_head, &h, nodes);
    cache.probs.iter().map(|p| p.as_f64()).collect()
}

/// Settings for the finite-difference verification harness.
#[derive(Debug, Clone)]
pub struct GradCheckSettings {
    pub hidden_dim: usize,
    pub per_type: usize,
    pub real_batch: usize,
    pub lambda: f64,
    pub step: f64,
    /// 0 checks every coordinate; otherwise a per-tensor random subset.
    pub max_coords_per_tensor: usize,
    pub single_head: bool,
}

impl Default for GradCheckSettings {
    fn default() -> Self {
        Self {
            hidden_dim: 8,
            per_type: 2,
            real_batch: 8,
            lambda: 4.0,
            step: 1e-5,
            max_coords_per_tensor: 0,
            single_head: false,
        }
    }
}

/// Build one full batch composition on `g` and compare analytic gradients of
/// the joint loss against central finite differences, in f64.
pub fn grad_check(
    g: &Graph,
    pool: &[u32],
    labeled_anomalies: &[u32],
    settings: &GradCheckSettings,
    seed: u64,
) -> Result<GradCheckReport> {
    let dims = ModelDims {
        input_dim: g.feature_dim(),
        hidden_dim: settings.hidden_dim,
        synth_heads: if settings.single_head { 1 } else { 5 },
    };
    let mut init_rng = stream(seed, StreamId::ParamInit);
    let mut model: ModelParams<f64> = ModelParams::init(&dims, &mut init_rng);

    let mut inj_rng = stream(seed, StreamId::Injection);
    let perturb_cfg = PerturbConfig { per_type: settings.per_type, ..Default::default() };
    let (perturbed, ledger) = inject_all(g, pool, &perturb_cfg, &mut inj_rng)?;
    let mut synth_rng = stream(seed, StreamId::SynthBatch);
    let batches = sample_synth_batches(&ledger, pool, settings.single_head, &mut synth_rng)?;
    let mut real_rng = stream(seed, StreamId::RealBatch);
    let real_batch = sample_real_batch(labeled_anomalies, pool, settings.real_batch, &mut real_rng)?;

    let analytic = losses_and_grads(
        &model.params,
        Some((g, &real_batch)),
        Some((&perturbed, &batches)),
        settings.lambda,
    )?
    .grads;

    let loss_fn = |p: &ParamSet<f64>| {
        let lr = real_loss(p, g, &real_batch).expect("forward loss");
        let ls = synth_loss(p, &perturbed, &batches).expect("forward loss");
        total_loss(lr, ls, settings.lambda)
    };
    let mut subset_rng: StreamRng = stream(seed ^ 0x5eed, StreamId::ParamInit);
    Ok(finite_diff_report(
        &mut model.params,
        &analytic,
        loss_fn,
        settings.step,
        settings.max_coords_per_tensor,
        &[],
        Some(&mut subset_rng),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{gen_benchmark, BenchmarkConfig};
    use crate::graph::Label;

    fn test_graph() -> (Graph, Vec<u32>, Vec<u32>) {
        let cfg = BenchmarkConfig {
            communities: 2,
            nodes_per_community: 30,
            p_intra: 0.15,
            p_inter: 0.02,
            feature_dim: 6,
            anomaly_fraction: 0.1,
            ..Default::default()
        };
        let (g, labels) = gen_benchmark(&cfg, 11).unwrap();
        let anomalies = labels.anomalies();
        let pool: Vec<u32> =
            (0..60).filter(|v| labels.get(*v) == Label::Normal).collect();
        (g, pool, anomalies)
    }

    fn ledger_for(g: &Graph, pool: &[u32], s: usize, seed: u64) -> (Graph, PerturbationLedger) {
        let cfg = PerturbConfig { per_type: s, ..Default::default() };
        let mut rng = stream(seed, StreamId::Injection);
        inject_all(g, pool, &cfg, &mut rng).unwrap()
    }

    #[test]
    fn synth_batches_are_exactly_balanced() {
        let (g, pool, _) = test_graph();
        let (_, ledger) = ledger_for(&g, &pool, 3, 1);
        let mut rng = stream(1, StreamId::SynthBatch);
        let batches = sample_synth_batches(&ledger, &pool, false, &mut rng).unwrap();
        assert_eq!(batches.len(), 5);
        for (k, b) in batches.iter().enumerate() {
            assert_eq!(b.head, k);
            assert_eq!(b.nodes.len(), 6);
            assert_eq!(b.labels.iter().filter(|y| **y).count(), 3);
            // controls never overlap any perturbed set
            let targets = ledger.all_targets();
            for c in &b.controls {
                assert!(!targets.contains(c));
            }
        }
    }

    #[test]
    fn single_head_batches_share_head_zero() {
        let (g, pool, _) = test_graph();
        let (_, ledger) = ledger_for(&g, &pool, 2, 2);
        let mut rng = stream(2, StreamId::SynthBatch);
        let batches = sample_synth_batches(&ledger, &pool, true, &mut rng).unwrap();
        assert!(batches.iter().all(|b| b.head == 0));
    }

    #[test]
    fn real_batch_is_half_and_half() {
        let (_, pool, anomalies) = test_graph();
        let mut rng = stream(3, StreamId::RealBatch);
        let batch = sample_real_batch(&anomalies, &pool, 32, &mut rng).unwrap();
        assert_eq!(batch.nodes.len(), 32);
        assert_eq!(batch.labels.iter().filter(|y| **y).count(), 16);
        for (node, &label) in batch.nodes.iter().zip(&batch.labels) {
            if label {
                assert!(anomalies.contains(node));
            } else {
                assert!(pool.contains(node));
            }
        }
    }

    #[test]
    fn single_labeled_anomaly_fills_half_the_batch() {
        let (_, pool, anomalies) = test_graph();
        let one = vec![anomalies[0]];
        let mut rng = stream(4, StreamId::RealBatch);
        let batch = sample_real_batch(&one, &pool, 16, &mut rng).unwrap();
        assert!(batch.nodes[..8].iter().all(|v| *v == anomalies[0]));
    }

    #[test]
    fn no_labeled_anomalies_directs_to_warmup() {
        let (_, pool, _) = test_graph();
        let mut rng = stream(5, StreamId::RealBatch);
        let err = sample_real_batch(&[], &pool, 16, &mut rng).unwrap_err();
        assert!(err.to_string().contains("warm-up"));
    }

    #[test]
    fn loss_values_at_zero_params() {
        let (g, pool, anomalies) = test_graph();
        let (perturbed, ledger) = ledger_for(&g, &pool, 3, 6);
        let mut rng = stream(6, StreamId::SynthBatch);
        let batches = sample_synth_batches(&ledger, &pool, false, &mut rng).unwrap();
        let dims = ModelDims { input_dim: 6, hidden_dim: 4, synth_heads: 5 };
        let params: ParamSet<f64> = ParamSet::zeros(&dims);
        let ls = synth_loss(&params, &perturbed, &batches).unwrap();
        assert!((ls - 5.0 * std::f64::consts::LN_2).abs() < 1e-12);

        let mut rng = stream(6, StreamId::RealBatch);
        let rb = sample_real_batch(&anomalies, &pool, 8, &mut rng).unwrap();
        let lr = real_loss(&params, &g, &rb).unwrap();
        assert!((lr - std::f64::consts::LN_2).abs() < 1e-12);

        assert_eq!(total_loss(0.7, 3.5, 4.0), 0.7 + 14.0);
        assert_eq!(total_loss(0.7, 3.5, 0.0), 0.7);
    }

    #[test]
    fn four_type_loss_after_mask() {
        let (g, pool, _) = test_graph();
        let cfg = PerturbConfig {
            per_type: 3,
            enabled: [true, true, false, true, true],
            ..Default::default()
        };
        let mut rng = stream(7, StreamId::Injection);
        let (perturbed, ledger) = inject_all(&g, &pool, &cfg, &mut rng).unwrap();
        let mut rng = stream(7, StreamId::SynthBatch);
        let batches = sample_synth_batches(&ledger, &pool, false, &mut rng).unwrap();
        let dims = ModelDims { input_dim: 6, hidden_dim: 4, synth_heads: 4 };
        let params: ParamSet<f64> = ParamSet::zeros(&dims);
        let ls = synth_loss(&params, &perturbed, &batches).unwrap();
        assert!((ls - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn unused_heads_get_exactly_zero_grads() {
        let (g, pool, anomalies) = test_graph();
        let dims = ModelDims { input_dim: 6, hidden_dim: 4, synth_heads: 5 };
        let mut rng = stream(8, StreamId::ParamInit);
        let params: ParamSet<f64> = ParamSet::init(&dims, &mut rng);
        let mut rng = stream(8, StreamId::RealBatch);
        let rb = sample_real_batch(&anomalies, &pool, 8, &mut rng).unwrap();
        let out = losses_and_grads(&params, Some((&g, &rb)), None, 0.0).unwrap();
        for head in &out.grads.synth_heads {
            assert!(head.w1.data.iter().all(|x| *x == 0.0));
            assert!(head.w2.iter().all(|x| *x == 0.0));
        }
        assert!(out.grads.real_head.w2.iter().any(|x| *x != 0.0));

        let (perturbed, ledger) = ledger_for(&g, &pool, 2, 9);
        let mut rng = stream(9, StreamId::SynthBatch);
        let batches = sample_synth_batches(&ledger, &pool, false, &mut rng).unwrap();
        let out = losses_and_grads(&params, None, Some((&perturbed, &batches)), 1.0).unwrap();
        assert!(out.grads.real_head.w1.data.iter().all(|x| *x == 0.0));
        assert!(out.grads.synth_heads[0].w2.iter().any(|x| *x != 0.0));
    }

    #[test]
    fn gradient_additivity_holds() {
        let (g, pool, anomalies) = test_graph();
        let dims = ModelDims { input_dim: 6, hidden_dim: 5, synth_heads: 5 };
        let mut rng = stream(10, StreamId::ParamInit);
        let params: ParamSet<f64> = ParamSet::init(&dims, &mut rng);
        let (perturbed, ledger) = ledger_for(&g, &pool, 2, 10);
        let mut rng = stream(10, StreamId::SynthBatch);
        let batches = sample_synth_batches(&ledger, &pool, false, &mut rng).unwrap();
        let mut rng = stream(10, StreamId::RealBatch);
        let rb = sample_real_batch(&anomalies, &pool, 8, &mut rng).unwrap();

        let lambda = 4.0;
        let total = losses_and_grads(&params, Some((&g, &rb)), Some((&perturbed, &batches)), lambda)
            .unwrap()
            .grads;
        let real = losses_and_grads(&params, Some((&g, &rb)), None, 0.0).unwrap().grads;
        let synth = losses_and_grads(&params, None, Some((&perturbed, &batches)), 1.0)
            .unwrap()
            .grads;
        let mut combined = real;
        combined.axpy(lambda, &synth);
        assert!(total.max_rel_diff(&combined, 1e-9) < 1e-6);
    }

    #[test]
    fn grad_check_small_model_passes() {
        let (g, pool, anomalies) = test_graph();
        let settings = GradCheckSettings {
            hidden_dim: 4,
            per_type: 2,
            real_batch: 6,
            max_coords_per_tensor: 10,
            ..Default::default()
        };
        let report = grad_check(&g, &pool, &anomalies, &settings, 3).unwrap();
        assert!(report.max_rel_err() < 1e-4, "{}", report.render());
    }
}
