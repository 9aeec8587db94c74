//! Exact ranking metrics, multi-seed aggregation and the ablation harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Label, LabelSet};
use crate::split::make_weak_split;
use crate::trainer::{train, TrainConfig};

/// Scores with ground-truth labels for one node set.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    pub ids: Vec<u32>,
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
}

impl ScoreSet {
    pub fn new(ids: Vec<u32>, scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if ids.len() != scores.len() || scores.len() != labels.len() {
            return Err(Error::Contract("score set length mismatch".into()));
        }
        Ok(Self { ids, scores, labels })
    }

    pub fn from_nodes(nodes: &[u32], scores: Vec<f64>, labels: &LabelSet) -> Result<Self> {
        let truth = nodes.iter().map(|&v| labels.get(v) == Label::Anomaly).collect();
        Self::new(nodes.to_vec(), scores, truth)
    }

    fn counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|y| **y).count();
        (pos, self.labels.len() - pos)
    }
}

/// AUROC via the rank-sum formulation with midranks: the probability that a
/// random positive outranks a random negative, ties counting one half.
pub fn auroc(set: &ScoreSet) -> Result<f64> {
    let (pos, neg) = set.counts();
    if pos == 0 || neg == 0 {
        return Err(Error::Metric(format!(
            "auroc undefined: {pos} positives, {neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..set.scores.len()).collect();
    order.sort_by(|&a, &b| set.scores[a].partial_cmp(&set.scores[b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && set.scores[order[j + 1]] == set.scores[order[i]] {
            j += 1;
        }
        // 1-based midrank of the tied block [i, j]
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if set.labels[idx] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let p = pos as f64;
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * neg as f64))
}

/// Average precision with tied scores grouped: all items at a tied score
/// level enter the cut together.
pub fn auprc(set: &ScoreSet) -> Result<f64> {
    let (pos, _) = set.counts();
    if pos == 0 {
        return Err(Error::Metric("auprc undefined without positives".into()));
    }
    let mut order: Vec<usize> = (0..set.scores.len()).collect();
    order.sort_by(|&a, &b| set.scores[b].partial_cmp(&set.scores[a]).unwrap());
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && set.scores[order[j + 1]] == set.scores[order[i]] {
            j += 1;
        }
        let mut block_tp = 0usize;
        for &idx in &order[i..=j] {
            if set.labels[idx] {
                block_tp += 1;
            }
        }
        tp += block_tp;
        fp += (j - i + 1) - block_tp;
        if block_tp > 0 {
            let precision = tp as f64 / (tp + fp) as f64;
            ap += precision * block_tp as f64 / pos as f64;
        }
        i = j + 1;
    }
    Ok(ap)
}

/// One training run's result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub variant: String,
    pub seed: u64,
    pub auroc: f64,
    pub auprc: f64,
    pub epochs: usize,
    pub wall_s: f64,
}

/// Mean and sample standard deviation over seeds for one variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregated {
    pub variant: String,
    pub runs: usize,
    pub auroc_mean: f64,
    pub auroc_std: f64,
    pub auprc_mean: f64,
    pub auprc_std: f64,
    /// Set when a single run makes the standard deviation degenerate.
    pub degenerate_std: bool,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregate rows that share a variant (the caller groups them).
pub fn aggregate(rows: &[RunMetrics]) -> Result<Aggregated> {
    if rows.is_empty() {
        return Err(Error::Contract("aggregate over zero runs".into()));
    }
    let variant = rows[0].variant.clone();
    let aurocs: Vec<f64> = rows.iter().map(|r| r.auroc).collect();
    let auprcs: Vec<f64> = rows.iter().map(|r| r.auprc).collect();
    let (am, asd) = mean_std(&aurocs);
    let (pm, psd) = mean_std(&auprcs);
    Ok(Aggregated {
        variant,
        runs: rows.len(),
        auroc_mean: am,
        auroc_std: asd,
        auprc_mean: pm,
        auprc_std: psd,
        degenerate_std: rows.len() < 2,
    })
}

pub const METRICS_CSV_HEADER: &str = "variant,seed,auroc,auprc,epochs,wall_s";

pub fn metrics_csv(rows: &[RunMetrics]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.variant, r.seed, r.auroc, r.auprc, r.epochs, r.wall_s
        ));
    }
    out
}

/// The regularization-weight sweep of the ablation suite.
pub const LAMBDA_SWEEP: [f64; 10] = [0.0, 0.5, 1.0, 2.0, 4.0, 10.0, 20.0, 50.0, 100.0, 300.0];

/// Enumerate every ablation variant from a base configuration: the
/// warm-up/regularizer grid, five leave-one-type-out variants, the shared
/// single-head variant, and the lambda sweep.
pub fn ablation_variants(base: &TrainConfig) -> Vec<(String, TrainConfig)> {
    let mut out = Vec::new();
    for (name, warm, reg) in [
        ("full", true, true),
        ("no_warmup", false, true),
        ("no_regularizer", true, false),
        ("baseline", false, false),
    ] {
        let mut cfg = base.clone();
        cfg.enable_warmup = warm;
        cfg.enable_regularizer = reg;
        out.push((name.to_string(), cfg));
    }
    for tau in 1..=5usize {
        let mut cfg = base.clone();
        cfg.perturb.enabled[tau - 1] = false;
        out.push((format!("drop_tau{tau}"), cfg));
    }
    {
        let mut cfg = base.clone();
        cfg.specialized_heads = false;
        out.push(("single_head".to_string(), cfg));
    }
    for lambda in LAMBDA_SWEEP {
        let mut cfg = base.clone();
        cfg.lambda = lambda;
        out.push((format!("lambda_{lambda}"), cfg));
    }
    out
}

/// Outcome of the full ablation run: one row per (variant, seed) and one
/// aggregate per variant, both in enumeration order.
#[derive(Debug, Clone)]
pub struct AblationOutcome {
    pub rows: Vec<RunMetrics>,
    pub aggregates: Vec<Aggregated>,
}

/// Run every ablation variant across `seeds`, fanned over `jobs` worker
/// threads. Each run re-splits with its own seed, so variants see identical
/// data per seed.
pub fn ablation_suite(
    g: &Graph,
    labels: &LabelSet,
    base: &TrainConfig,
    m: usize,
    contamination: f64,
    seeds: &[u64],
    jobs: usize,
) -> Result<AblationOutcome> {
    let variants = ablation_variants(base);
    let mut tasks: Vec<(usize, String, TrainConfig, u64)> = Vec::new();
    for (vi, (name, cfg)) in variants.iter().enumerate() {
        for &seed in seeds {
            let mut cfg = cfg.clone();
            cfg.seed = seed;
            tasks.push((vi, name.clone(), cfg, seed));
        }
    }

    let results = run_parallel(jobs.max(1), &tasks, |(_, name, cfg, seed)| {
        let started = std::time::Instant::now();
        let split = make_weak_split(labels, m, contamination, (0.8, 0.1, 0.1), *seed)?;
        let outcome = train::<f32>(g, labels, &split, cfg)?;
        Ok(RunMetrics {
            variant: name.clone(),
            seed: *seed,
            auroc: outcome.test_auroc,
            auprc: outcome.test_auprc,
            epochs: outcome.log.records.len(),
            wall_s: started.elapsed().as_secs_f64(),
        })
    })?;

    let mut rows = Vec::with_capacity(tasks.len());
    let mut aggregates = Vec::with_capacity(variants.len());
    for (vi, (name, _)) in variants.iter().enumerate() {
        let mut group: Vec<RunMetrics> = Vec::new();
        for (t, r) in tasks.iter().zip(results.iter()) {
            if t.0 == vi {
                group.push(r.clone());
            }
        }
        debug_assert!(group.iter().all(|r| r.variant == *name));
        aggregates.push(aggregate(&group)?);
        rows.extend(group);
    }
    Ok(AblationOutcome { rows, aggregates })
}

/// Run `work` over `tasks` on up to `jobs` threads, preserving task order in
/// the returned vector.
pub fn run_parallel<T: Sync, R: Send>(
    jobs: usize,
    tasks: &[T],
    work: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    if jobs <= 1 || tasks.len() <= 1 {
        return tasks.iter().map(&work).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<R>>> = (0..tasks.len()).map(|_| None).collect();
    let slots_ref = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(tasks.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= tasks.len() {
                    break;
                }
                let r = work(&tasks[i]);
                slots_ref.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|s| s.expect("worker filled every slot")).collect()
}
