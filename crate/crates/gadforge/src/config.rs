//! Run configuration: one JSON document, unknown keys rejected, every field
//! defaulted. Command-line flags override file values; the fully resolved
//! config is echoed into the run directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmark::{gen_benchmark, BenchmarkConfig};
use crate::error::{Error, Result};
use crate::graph::{zscore_features, Graph, LabelSet};
use crate::io::load_graph;
use crate::perturb::PerturbConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset file in the text format; absent = generate the benchmark.
    pub dataset: Option<PathBuf>,
    /// Benchmark geometry used when no dataset is given.
    pub benchmark: BenchmarkConfig,
    /// Base seed; run r uses seed `seed + r`.
    pub seed: u64,
    /// Number of runs aggregated into the report.
    pub runs: usize,
    /// Labeled anomalies kept in the train split.
    pub m: usize,
    /// Hidden-anomaly fraction of the unlabeled train pool.
    pub contamination: f64,
    pub train_ratio: f64,
    pub val_ratio: f64,
    pub test_ratio: f64,
    /// Weight of the synthetic loss in the joint objective.
    pub lambda: f64,
    /// Nodes perturbed per anomaly type.
    pub per_type: usize,
    /// Candidate set size for dissimilarity ranking.
    pub candidate_pool: usize,
    pub real_batch_size: usize,
    pub warm_epochs: usize,
    pub full_epochs: usize,
    pub steps_per_epoch: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden_dim: usize,
    pub enable_warmup: bool,
    pub enable_regularizer: bool,
    pub specialized_heads: bool,
    /// Anomaly types (1-5) to disable.
    pub drop_taus: Vec<usize>,
    pub reset_adam_between_phases: bool,
    /// Optional per-dimension feature standardization, off by default.
    pub zscore_features: bool,
    /// Worker threads for multi-seed and ablation fan-out.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            benchmark: BenchmarkConfig::default(),
            seed: 0,
            runs: 16,
            m: 30,
            contamination: 0.01,
            train_ratio: 0.8,
            val_ratio: 0.1,
            test_ratio: 0.1,
            lambda: 4.0,
            per_type: 32,
            candidate_pool: 4096,
            real_batch_size: 512,
            warm_epochs: 100,
            full_epochs: 200,
            steps_per_epoch: 1,
            lr: 1e-3,
            weight_decay: 0.01,
            hidden_dim: 64,
            enable_warmup: true,
            enable_regularizer: true,
            specialized_heads: true,
            drop_taus: Vec::new(),
            reset_adam_between_phases: false,
            zscore_features: false,
            jobs: 1,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: format!("bad config: {e}"),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        for tau in &self.drop_taus {
            if !(1..=5).contains(tau) {
                return Err(Error::Config(format!("drop_taus entries must be 1..=5, got {tau}")));
            }
        }
        if !(0.0..1.0).contains(&self.contamination) {
            return Err(Error::Config(format!(
                "contamination must be in [0,1), got {}",
                self.contamination
            )));
        }
        self.to_train_config(self.seed).validate()?;
        if self.dataset.is_none() {
            self.benchmark.validate()?;
        }
        Ok(())
    }

    pub fn ratios(&self) -> (f64, f64, f64) {
        (self.train_ratio, self.val_ratio, self.test_ratio)
    }

    /// Seeds of the individual runs.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|r| self.seed + r).collect()
    }

    pub fn perturb_config(&self) -> PerturbConfig {
        let mut enabled = [true; 5];
        for tau in &self.drop_taus {
            enabled[tau - 1] = false;
        }
        PerturbConfig {
            per_type: self.per_type,
            candidate_pool: self.candidate_pool,
            enabled,
            ..Default::default()
        }
    }

    pub fn to_train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            warm_epochs: self.warm_epochs,
            full_epochs: self.full_epochs,
            lr: self.lr,
            weight_decay: self.weight_decay,
            lambda: self.lambda,
            perturb: self.perturb_config(),
            real_batch_size: self.real_batch_size,
            steps_per_epoch: self.steps_per_epoch,
            hidden_dim: self.hidden_dim,
            enable_warmup: self.enable_warmup,
            enable_regularizer: self.enable_regularizer,
            specialized_heads: self.specialized_heads,
            reset_adam_between_phases: self.reset_adam_between_phases,
            seed,
        }
    }

    /// Load the dataset file, or generate the benchmark with `gen_seed`.
    /// Applies the optional z-score preprocessing.
    pub fn load_data(&self, gen_seed: u64) -> Result<(Graph, LabelSet)> {
        let (g, labels) = match &self.dataset {
            Some(path) => load_graph(path)?,
            None => gen_benchmark(&self.benchmark, gen_seed)?,
        };
        let g = if self.zscore_features { zscore_features(&g)? } else { g };
        Ok((g, labels))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
