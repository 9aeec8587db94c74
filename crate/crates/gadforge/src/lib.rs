//! Weakly supervised graph anomaly detection driven by synthetic
//! perturbation tasks.
//!
//! The pipeline: perturbation operators manufacture labeled synthetic
//! anomalies on an attributed graph; a shared attention encoder plus per-type
//! detection heads learn to spot them (warm-up); a scoring head for real
//! anomalies then trains jointly, with the synthetic task kept as a
//! regularizer. Everything is seeded and reproducible down to the byte.
//!
//! Start with the runnable examples (`cargo run --example ...`) or the
//! `gadforge` binary for the end-to-end commands.

pub mod benchmark;
pub mod config;
pub mod error;
pub mod eval;
pub mod graph;
pub mod harness;
pub mod io;
pub mod model;
pub mod nn;
pub mod perturb;
pub mod rng;
pub mod split;
pub mod trainer;

pub use benchmark::{gen_benchmark, BenchmarkConfig};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use eval::{aggregate, auprc, auroc, Aggregated, RunMetrics, ScoreSet};
pub use graph::{degree_stats, feature_stats, FeatureStats, Graph, Label, LabelSet, WorkGraph};
pub use io::{export_embeddings, graph_to_text, load_graph, parse_graph, save_graph};
pub use model::{
    grad_check, losses_and_grads, real_loss, sample_real_batch, sample_synth_batches, score_nodes,
    synth_loss, total_loss, GradCheckSettings, RealBatch, SynthBatch,
};
pub use nn::{
    adam_step, encode, load_checkpoint, save_checkpoint, AdamConfig, Checkpoint, GradCheckReport,
    Mat, ModelDims, ModelParams, ParamSet, Real,
};
pub use perturb::{inject_all, PerturbConfig, PerturbationLedger, TauKind, ALL_TAUS};
pub use rng::{stream, StreamId};
pub use split::{make_weak_split, WeakSplit};
pub use trainer::{train, RunLog, TrainConfig, TrainOutcome};
