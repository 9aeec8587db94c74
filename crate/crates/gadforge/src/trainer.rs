//! Two-phase training.
//!
//! Warm-up trains the encoder and synthetic heads on the synthetic loss
//! alone, with a fresh injection every epoch. The full phase inherits those
//! parameters (and, by default, the Adam moments) and optimizes
//! `L_real + lambda * L_synth`, evaluating validation AUROC after every
//! epoch and keeping the best checkpoint. Each random decision draws from
//! its own stream, so disabling the warm-up or the regularizer leaves the
//! remaining phases' draws untouched.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{auprc, auroc, ScoreSet};
use crate::graph::{Graph, LabelSet};
use crate::model::{losses_and_grads, sample_real_batch, sample_synth_batches, score_nodes};
use crate::nn::{adam_step, AdamConfig, ModelDims, ModelParams, ParamSet, Real};
use crate::perturb::{inject_all, PerturbConfig};
use crate::rng::{stream, StreamId, StreamRng};
use crate::split::WeakSplit;

/// Everything the two-phase procedure needs to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub warm_epochs: usize,
    pub full_epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub lambda: f64,
    pub perturb: PerturbConfig,
    pub real_batch_size: usize,
    /// Joint updates per full-phase epoch (fresh real batch each).
    pub steps_per_epoch: usize,
    pub hidden_dim: usize,
    pub enable_warmup: bool,
    pub enable_regularizer: bool,
    /// One head per anomaly type, or a single shared synthetic head.
    pub specialized_heads: bool,
    /// Zero the Adam moments when entering the full phase.
    pub reset_adam_between_phases: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            warm_epochs: 100,
            full_epochs: 200,
            lr: 1e-3,
            weight_decay: 0.01,
            lambda: 4.0,
            perturb: PerturbConfig::default(),
            real_batch_size: 512,
            steps_per_epoch: 1,
            hidden_dim: 64,
            enable_warmup: true,
            enable_regularizer: true,
            specialized_heads: true,
            reset_adam_between_phases: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.full_epochs < 1 {
            return Err(Error::Config("full_epochs must be >= 1".into()));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.steps_per_epoch < 1 {
            return Err(Error::Config("steps_per_epoch must be >= 1".into()));
        }
        if self.hidden_dim < 1 {
            return Err(Error::Config("hidden_dim must be >= 1".into()));
        }
        if self.perturb.enabled_kinds().is_empty()
            && (self.enable_warmup || self.enable_regularizer)
        {
            return Err(Error::Config(
                "all anomaly types disabled: turn off warm-up and regularizer too".into(),
            ));
        }
        self.perturb.validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, weight_decay: self.weight_decay, ..Default::default() }
    }

    /// Number of synthetic heads the model carries under this config.
    pub fn synth_head_count(&self) -> usize {
        if self.specialized_heads {
            self.perturb.enabled_kinds().len().max(1)
        } else {
            1
        }
    }

    pub fn dims_for(&self, g: &Graph) -> ModelDims {
        ModelDims {
            input_dim: g.feature_dim(),
            hidden_dim: self.hidden_dim,
            synth_heads: self.synth_head_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Warmup,
    Full,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Warmup => "warmup",
            Phase::Full => "full",
        })
    }
}

/// One epoch's observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub phase: Phase,
    pub epoch: usize,
    pub l_synth: Option<f64>,
    pub l_real: Option<f64>,
    pub val_auroc: Option<f64>,
    pub val_auprc: Option<f64>,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub records: Vec<EpochRecord>,
}

impl RunLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,epoch,l_synth,l_real,val_auroc,val_auprc,wall_s\n");
        fn opt(x: Option<f64>) -> String {
            x.map(|v| v.to_string()).unwrap_or_default()
        }
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.phase,
                r.epoch,
                opt(r.l_synth),
                opt(r.l_real),
                opt(r.val_auroc),
                opt(r.val_auprc),
                r.wall_s
            );
        }
        out
    }

    /// The log without timing columns; identical across reruns of one seed.
    pub fn deterministic_view(&self) -> Vec<(Phase, usize, Option<f64>, Option<f64>, Option<f64>)> {
        self.records
            .iter()
            .map(|r| (r.phase, r.epoch, r.l_synth, r.l_real, r.val_auroc))
            .collect()
    }
}

/// The per-purpose RNG streams a training run consumes.
pub struct TrainStreams {
    pub injection: StreamRng,
    pub synth_batch: StreamRng,
    pub real_batch: StreamRng,
}

impl TrainStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            injection: stream(seed, StreamId::Injection),
            synth_batch: stream(seed, StreamId::SynthBatch),
            real_batch: stream(seed, StreamId::RealBatch),
        }
    }

    pub fn positions(&self) -> Vec<(u8, u128)> {
        vec![
            (StreamId::Injection as u8, self.injection.get_word_pos()),
            (StreamId::SynthBatch as u8, self.synth_batch.get_word_pos()),
            (StreamId::RealBatch as u8, self.real_batch.get_word_pos()),
        ]
    }
}

/// Warm-up phase: `warm_epochs` updates on the synthetic loss alone. Real
/// labels are never touched.
pub fn run_warmup<T: Real>(
    g: &Graph,
    split: &WeakSplit,
    cfg: &TrainConfig,
    model: &mut ModelParams<T>,
    streams: &mut TrainStreams,
    log: &mut RunLog,
) -> Result<()> {
    let adam = cfg.adam();
    for epoch in 1..=cfg.warm_epochs {
        let started = Instant::now();
        let (perturbed, ledger) =
            inject_all(g, &split.unlabeled_pool, &cfg.perturb, &mut streams.injection)?;
        let batches = sample_synth_batches(
            &ledger,
            &split.unlabeled_pool,
            !cfg.specialized_heads,
            &mut streams.synth_batch,
        )?;
        let out = losses_and_grads(&model.params, None, Some((&perturbed, &batches)), 1.0)?;
        adam_step(model, &out.grads, &adam)?;
        log.records.push(EpochRecord {
            phase: Phase::Warmup,
            epoch,
            l_synth: out.l_synth.map(|x| x.as_f64()),
            l_real: None,
            val_auroc: None,
            val_auprc: None,
            wall_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(())
}

/// Best checkpoint found during the full phase.
#[derive(Debug)]
pub struct BestSnapshot<T> {
    pub model: ModelParams<T>,
    /// 1-based full-phase epoch; 0 when no epoch improved on the initial state.
    pub epoch: usize,
    pub val_auroc: f64,
}

/// Full phase: joint updates with per-epoch validation scoring and best-
/// checkpoint tracking. Parameters arrive from warm-up, never reinitialized.
pub fn run_full<T: Real>(
    g: &Graph,
    labels: &LabelSet,
    split: &WeakSplit,
    cfg: &TrainConfig,
    model: &mut ModelParams<T>,
    streams: &mut TrainStreams,
    log: &mut RunLog,
) -> Result<BestSnapshot<T>> {
    if split.labeled_anomalies.is_empty() {
        return Err(Error::Config(
            "full phase requested with m = 0 labeled anomalies".into(),
        ));
    }
    let adam = cfg.adam();
    let mut best: Option<BestSnapshot<T>> = None;
    for epoch in 1..=cfg.full_epochs {
        let started = Instant::now();
        let synth_data = if cfg.enable_regularizer {
            let (perturbed, ledger) =
                inject_all(g, &split.unlabeled_pool, &cfg.perturb, &mut streams.injection)?;
            let batches = sample_synth_batches(
                &ledger,
                &split.unlabeled_pool,
                !cfg.specialized_heads,
                &mut streams.synth_batch,
            )?;
            Some((perturbed, batches))
        } else {
            None
        };
        let mut last_real = None;
        let mut last_synth = None;
        for _ in 0..cfg.steps_per_epoch {
            let real_batch = sample_real_batch(
                &split.labeled_anomalies,
                &split.unlabeled_pool,
                cfg.real_batch_size,
                &mut streams.real_batch,
            )?;
            let out = losses_and_grads(
                &model.params,
                Some((g, &real_batch)),
                synth_data.as_ref().map(|(pg, b)| (pg, b.as_slice())),
                cfg.lambda,
            )?;
            adam_step(model, &out.grads, &adam)?;
            last_real = out.l_real.map(|x| x.as_f64());
            last_synth = out.l_synth.map(|x| x.as_f64());
        }

        let scores = score_nodes(&model.params, g, &split.val);
        let val_set = ScoreSet::from_nodes(&split.val, scores, labels)?;
        let val_auroc = auroc(&val_set)?;
        let val_auprc = auprc(&val_set)?;
        if best.as_ref().map_or(true, |b| val_auroc > b.val_auroc) {
            best = Some(BestSnapshot { model: model.clone(), epoch, val_auroc });
        }
        log.records.push(EpochRecord {
            phase: Phase::Full,
            epoch,
            l_synth: last_synth,
            l_real: last_real,
            val_auroc: Some(val_auroc),
            val_auprc: Some(val_auprc),
            wall_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(best.expect("full_epochs >= 1 guarantees a snapshot"))
}

/// A completed run: final and best parameters plus test metrics computed
/// once, on the validation-selected checkpoint.
#[derive(Debug)]
pub struct TrainOutcome<T> {
    pub final_model: ModelParams<T>,
    pub best_model: ModelParams<T>,
    pub best_epoch: usize,
    pub best_val_auroc: f64,
    pub log: RunLog,
    pub test_auroc: f64,
    pub test_auprc: f64,
    pub stream_positions: Vec<(u8, u128)>,
}

/// The whole procedure: optional warm-up, full phase with inherited
/// parameters, test metrics from the best-validation checkpoint.
pub fn train<T: Real>(
    g: &Graph,
    labels: &LabelSet,
    split: &WeakSplit,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if split.labeled_anomalies.is_empty() {
        return Err(Error::Config(
            "training needs m >= 1 labeled anomalies; with m = 0 run the warm-up phase only".into(),
        ));
    }
    let dims = cfg.dims_for(g);
    let mut init_rng = stream(cfg.seed, StreamId::ParamInit);
    let mut model: ModelParams<T> = ModelParams::init(&dims, &mut init_rng);
    let mut streams = TrainStreams::new(cfg.seed);
    let mut log = RunLog::default();

    if cfg.enable_warmup {
        run_warmup(g, split, cfg, &mut model, &mut streams, &mut log)?;
    }
    if cfg.reset_adam_between_phases {
        model.adam_m = ParamSet::zeros(&dims);
        model.adam_v = ParamSet::zeros(&dims);
        model.step = 0;
    }
    let best = run_full(g, labels, split, cfg, &mut model, &mut streams, &mut log)?;

    let scores = score_nodes(&best.model.params, g, &split.test);
    let test_set = ScoreSet::from_nodes(&split.test, scores, labels)?;
    let test_auroc = auroc(&test_set)?;
    let test_auprc = auprc(&test_set)?;
    Ok(TrainOutcome {
        final_model: model,
        best_model: best.model,
        best_epoch: best.epoch,
        best_val_auroc: best.val_auroc,
        log,
        test_auroc,
        test_auprc,
        stream_positions: streams.positions(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{gen_benchmark, BenchmarkConfig};
    use crate::split::make_weak_split;

    fn small_setup() -> (Graph, LabelSet, WeakSplit) {
        let cfg = BenchmarkConfig {
            communities: 2,
            nodes_per_community: 60,
            p_intra: 0.12,
            p_inter: 0.01,
            feature_dim: 6,
            anomaly_fraction: 0.1,
            ..Default::default()
        };
        let (g, labels) = gen_benchmark(&cfg, 5).unwrap();
        let split = make_weak_split(&labels, 5, 0.01, (0.8, 0.1, 0.1), 5).unwrap();
        (g, labels, split)
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            warm_epochs: 3,
            full_epochs: 4,
            real_batch_size: 16,
            hidden_dim: 8,
            perturb: PerturbConfig { per_type: 4, ..Default::default() },
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn zero_warm_epochs_leaves_params_unchanged() {
        let (g, _, split) = small_setup();
        let cfg = TrainConfig { warm_epochs: 0, ..small_cfg() };
        let dims = cfg.dims_for(&g);
        let mut rng = stream(cfg.seed, StreamId::ParamInit);
        let mut model: ModelParams<f32> = ModelParams::init(&dims, &mut rng);
        let before = model.clone();
        let mut streams = TrainStreams::new(cfg.seed);
        let mut log = RunLog::default();
        run_warmup(&g, &split, &cfg, &mut model, &mut streams, &mut log).unwrap();
        assert_eq!(model, before);
        assert!(log.records.is_empty());
    }

    #[test]
    fn warmup_is_deterministic_per_seed() {
        let (g, _, split) = small_setup();
        let cfg = small_cfg();
        let run = || {
            let dims = cfg.dims_for(&g);
            let mut rng = stream(cfg.seed, StreamId::ParamInit);
            let mut model: ModelParams<f32> = ModelParams::init(&dims, &mut rng);
            let mut streams = TrainStreams::new(cfg.seed);
            let mut log = RunLog::default();
            run_warmup(&g, &split, &cfg, &mut model, &mut streams, &mut log).unwrap();
            (model, log.deterministic_view())
        };
        let (m1, l1) = run();
        let (m2, l2) = run();
        assert_eq!(m1, m2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn full_phase_inherits_warmup_output_exactly() {
        let (g, labels, split) = small_setup();
        let cfg = small_cfg();
        // manual warm-up + full
        let dims = cfg.dims_for(&g);
        let mut rng = stream(cfg.seed, StreamId::ParamInit);
        let mut model: ModelParams<f32> = ModelParams::init(&dims, &mut rng);
        let mut streams = TrainStreams::new(cfg.seed);
        let mut log = RunLog::default();
        run_warmup(&g, &split, &cfg, &mut model, &mut streams, &mut log).unwrap();
        let warm_out = model.clone();
        run_full(&g, &labels, &split, &cfg, &mut model, &mut streams, &mut log).unwrap();

        // train() must pass through the identical warm-up state
        let outcome = train::<f32>(&g, &labels, &split, &cfg).unwrap();
        assert_eq!(outcome.final_model.step, (cfg.warm_epochs + cfg.full_epochs) as u64);
        // rebuilding the warm-up alone reproduces the inherited state
        let mut rng = stream(cfg.seed, StreamId::ParamInit);
        let mut again: ModelParams<f32> = ModelParams::init(&dims, &mut rng);
        let mut streams2 = TrainStreams::new(cfg.seed);
        let mut log2 = RunLog::default();
        run_warmup(&g, &split, &cfg, &mut again, &mut streams2, &mut log2).unwrap();
        assert_eq!(again, warm_out);
    }

    #[test]
    fn reinjection_differs_across_epochs() {
        let (g, _, split) = small_setup();
        let cfg = small_cfg();
        let mut streams = TrainStreams::new(3);
        let mut sets = Vec::new();
        for _ in 0..5 {
            let (_, ledger) =
                inject_all(&g, &split.unlabeled_pool, &cfg.perturb, &mut streams.injection)
                    .unwrap();
            sets.push(ledger.all_targets());
        }
        assert!(sets.windows(2).any(|w| w[0] != w[1]), "five identical injections");
    }

    #[test]
    fn m_zero_full_phase_is_config_error() {
        let (g, labels, _) = small_setup();
        let split = make_weak_split(&labels, 0, 0.0, (0.8, 0.1, 0.1), 5).unwrap();
        let err = train::<f32>(&g, &labels, &split, &small_cfg()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn lambda_zero_matches_no_regularizer_step_for_step() {
        let (g, labels, split) = small_setup();
        let mut with_zero = small_cfg();
        with_zero.enable_warmup = false;
        with_zero.lambda = 0.0;
        let mut without = with_zero.clone();
        without.enable_regularizer = false;

        let a = train::<f32>(&g, &labels, &split, &with_zero).unwrap();
        let b = train::<f32>(&g, &labels, &split, &without).unwrap();
        assert_eq!(a.final_model, b.final_model);
        assert_eq!(a.test_auroc, b.test_auroc);
        assert_eq!(a.best_epoch, b.best_epoch);
    }

    #[test]
    fn baseline_matches_pure_supervised_run_with_taus_disabled() {
        let (g, labels, split) = small_setup();
        let mut baseline = small_cfg();
        baseline.enable_warmup = false;
        baseline.enable_regularizer = false;
        let mut no_taus = baseline.clone();
        no_taus.perturb.enabled = [false; 5];
        let a = train::<f32>(&g, &labels, &split, &baseline).unwrap();
        let b = train::<f32>(&g, &labels, &split, &no_taus).unwrap();
        // the supervised path (encoder + real head) must match step for step;
        // unused synthetic heads differ in count and are excluded
        assert_eq!(a.final_model.params.layer1, b.final_model.params.layer1);
        assert_eq!(a.final_model.params.layer2, b.final_model.params.layer2);
        assert_eq!(a.final_model.params.real_head, b.final_model.params.real_head);
        assert_eq!(a.log.deterministic_view(), b.log.deterministic_view());
        assert_eq!(a.test_auroc, b.test_auroc);
    }

    #[test]
    fn runlog_csv_has_one_row_per_epoch() {
        let (g, labels, split) = small_setup();
        let cfg = small_cfg();
        let outcome = train::<f32>(&g, &labels, &split, &cfg).unwrap();
        assert_eq!(outcome.log.records.len(), cfg.warm_epochs + cfg.full_epochs);
        let csv = outcome.log.to_csv();
        assert_eq!(csv.lines().count(), 1 + cfg.warm_epochs + cfg.full_epochs);
        assert!(csv.starts_with("phase,epoch,"));
    }
}
