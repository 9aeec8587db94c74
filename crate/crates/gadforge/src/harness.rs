//! Experiment orchestration: run directories, multi-seed fan-out, metrics
//! files. Everything written here is deterministic for a given resolved
//! config except wall-clock columns, which only appear in `runlog.csv` and
//! the ablation CSV.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{
    ablation_suite, aggregate, auprc, auroc, metrics_csv, run_parallel, RunMetrics, ScoreSet,
};
use crate::graph::{Graph, LabelSet};
use crate::model::score_nodes;
use crate::nn::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::split::make_weak_split;
use crate::trainer::train;

/// One seed's deterministic result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRunSummary {
    pub seed: u64,
    pub auroc: f64,
    pub auprc: f64,
    pub best_epoch: usize,
    pub best_val_auroc: f64,
    pub epochs: usize,
}

/// Aggregated experiment report; serialized as `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub variant: String,
    pub runs: usize,
    pub auroc_mean: f64,
    pub auroc_std: f64,
    pub auprc_mean: f64,
    pub auprc_std: f64,
    pub degenerate_std: bool,
    pub per_run: Vec<SeedRunSummary>,
}

/// Human-readable descriptor of the flags a config encodes.
pub fn variant_name(cfg: &RunConfig) -> String {
    let mut parts = vec![match (cfg.enable_warmup, cfg.enable_regularizer) {
        (true, true) => "full".to_string(),
        (false, true) => "no_warmup".to_string(),
        (true, false) => "no_regularizer".to_string(),
        (false, false) => "baseline".to_string(),
    }];
    let mut taus = cfg.drop_taus.clone();
    taus.sort_unstable();
    taus.dedup();
    for tau in taus {
        parts.push(format!("drop_tau{tau}"));
    }
    if !cfg.specialized_heads {
        parts.push("single_head".to_string());
    }
    parts.join("+")
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

/// Train every configured seed, write one run directory per seed plus the
/// aggregated `metrics.json` at the top level.
///
/// With a dataset file the same graph is reused across runs (the paper-style
/// protocol); with a generated benchmark each run regenerates the graph from
/// its own seed, so runs are independent end to end.
pub fn run_training(cfg: &RunConfig, out: &Path) -> Result<TrainReport> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.json"), cfg.to_json_pretty())?;

    let shared: Option<(Graph, LabelSet)> =
        if cfg.dataset.is_some() { Some(cfg.load_data(cfg.seed)?) } else { None };

    let seeds = cfg.seeds();
    let summaries = run_parallel(cfg.jobs.max(1), &seeds, |&seed| {
        let (graph, labels) = match &shared {
            Some((g, l)) => (g.clone(), l.clone()),
            None => cfg.load_data(seed)?,
        };
        let split = make_weak_split(&labels, cfg.m, cfg.contamination, cfg.ratios(), seed)?;
        let train_cfg = cfg.to_train_config(seed);
        let outcome = train::<f32>(&graph, &labels, &split, &train_cfg)?;

        let dir = seed_dir(out, seed);
        fs::create_dir_all(&dir)?;
        fs::write(
            dir.join("config.json"),
            serde_json::to_string_pretty(&train_cfg).expect("train config serializes"),
        )?;
        fs::write(dir.join("runlog.csv"), outcome.log.to_csv())?;
        let ck = Checkpoint {
            model: outcome.best_model,
            seed,
            rng_positions: outcome.stream_positions,
        };
        save_checkpoint(&ck, dir.join("checkpoint_best"))?;
        let summary = SeedRunSummary {
            seed,
            auroc: outcome.test_auroc,
            auprc: outcome.test_auprc,
            best_epoch: outcome.best_epoch,
            best_val_auroc: outcome.best_val_auroc,
            epochs: outcome.log.records.len(),
        };
        fs::write(
            dir.join("metrics.json"),
            serde_json::to_string_pretty(&summary).expect("summary serializes"),
        )?;
        Ok(summary)
    })?;

    let variant = variant_name(cfg);
    let rows: Vec<RunMetrics> = summaries
        .iter()
        .map(|s| RunMetrics {
            variant: variant.clone(),
            seed: s.seed,
            auroc: s.auroc,
            auprc: s.auprc,
            epochs: s.epochs,
            wall_s: 0.0,
        })
        .collect();
    let agg = aggregate(&rows)?;
    let report = TrainReport {
        variant,
        runs: agg.runs,
        auroc_mean: agg.auroc_mean,
        auroc_std: agg.auroc_std,
        auprc_mean: agg.auprc_mean,
        auprc_std: agg.auprc_std,
        degenerate_std: agg.degenerate_std,
        per_run: summaries,
    };
    fs::write(
        out.join("metrics.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    Ok(report)
}

/// Score a saved checkpoint on the test split reconstructed from the config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub test_auroc: f64,
    pub test_auprc: f64,
    pub checkpoint_step: u64,
}

pub fn run_eval(
    cfg: &RunConfig,
    checkpoint_path: &Path,
    seed: u64,
    out: Option<&Path>,
    embeddings_out: Option<&Path>,
) -> Result<EvalReport> {
    let ck: Checkpoint<f32> = load_checkpoint(checkpoint_path)?;
    let (graph, labels) = cfg.load_data(seed)?;
    if graph.feature_dim() != ck.model.dims().input_dim {
        return Err(Error::Contract(format!(
            "checkpoint expects {} input features, dataset has {}",
            ck.model.dims().input_dim,
            graph.feature_dim()
        )));
    }
    let split = make_weak_split(&labels, cfg.m, cfg.contamination, cfg.ratios(), seed)?;
    let scores = score_nodes(&ck.model.params, &graph, &split.test);
    let set = ScoreSet::from_nodes(&split.test, scores, &labels)?;
    let report = EvalReport {
        seed,
        test_auroc: auroc(&set)?,
        test_auprc: auprc(&set)?,
        checkpoint_step: ck.model.step,
    };
    if let Some(path) = embeddings_out {
        let h32 = crate::nn::encode(&graph, &ck.model.params);
        let h64 = crate::nn::Mat::<f64> {
            rows: h32.rows,
            cols: h32.cols,
            data: h32.data.iter().map(|x| *x as f64).collect(),
        };
        crate::io::export_embeddings(&h64, &labels, None, path)?;
    }
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(path, serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    Ok(report)
}

/// Run the ablation suite and write `metrics.csv` plus `aggregated.json`.
pub fn run_ablation(cfg: &RunConfig, out: &Path) -> Result<Vec<crate::eval::Aggregated>> {
    cfg.validate()?;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.json"), cfg.to_json_pretty())?;
    let (graph, labels) = cfg.load_data(cfg.seed)?;
    let base = cfg.to_train_config(cfg.seed);
    let outcome = ablation_suite(
        &graph,
        &labels,
        &base,
        cfg.m,
        cfg.contamination,
        &cfg.seeds(),
        cfg.jobs.max(1),
    )?;
    fs::write(out.join("metrics.csv"), metrics_csv(&outcome.rows))?;
    fs::write(
        out.join("aggregated.json"),
        serde_json::to_string_pretty(&outcome.aggregates).expect("aggregates serialize"),
    )?;
    Ok(outcome.aggregates)
}
