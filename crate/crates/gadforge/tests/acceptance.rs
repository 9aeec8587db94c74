//! Acceptance suite. One test per criterion; each prints a PASS/FAIL line.
//!
//! The oracles here are deliberately independent of the library's
//! implementation paths: pairwise enumeration and exhaustive threshold
//! integration for the ranking metrics, a replay audit over the injection
//! ledger for the perturbation operators, and central finite differences for
//! the gradients.

use std::time::Instant;

use gadforge::graph::Label;
use gadforge::nn::checkpoint_bytes;
use gadforge::trainer::{run_warmup, Phase, RunLog, TrainStreams};
use gadforge::{
    auprc, auroc, gen_benchmark, grad_check, inject_all, losses_and_grads, make_weak_split,
    sample_real_batch, sample_synth_batches, stream, train, BenchmarkConfig, Checkpoint, Graph,
    GradCheckSettings, LabelSet, ModelDims, ModelParams, ParamSet, PerturbConfig, RunConfig,
    ScoreSet, StreamId, TauKind, TrainConfig, WeakSplit,
};

fn verdict(name: &str, ok: bool) {
    println!("acceptance {name}: {}", if ok { "PASS" } else { "FAIL" });
}

fn default_setup(seed: u64) -> (Graph, LabelSet, WeakSplit) {
    let bench = BenchmarkConfig::default();
    let (graph, labels) = gen_benchmark(&bench, seed).unwrap();
    let split = make_weak_split(&labels, 30, 0.01, (0.8, 0.1, 0.1), seed).unwrap();
    (graph, labels, split)
}

// ---------------------------------------------------------------- criterion 1

#[test]
fn c1_gradient_correctness() {
    let started = Instant::now();
    let bench = BenchmarkConfig {
        communities: 2,
        nodes_per_community: 15,
        p_intra: 0.2,
        p_inter: 0.05,
        feature_dim: 8,
        anomaly_fraction: 0.1,
        ..Default::default()
    };
    let (graph, labels) = gen_benchmark(&bench, 0).unwrap();
    assert_eq!(graph.node_count(), 30);
    let anomalies = labels.anomalies();
    let pool: Vec<u32> = (0..30u32).filter(|&v| labels.get(v) == Label::Normal).collect();
    // one synthetic batch per type plus one real batch, every coordinate
    let settings = GradCheckSettings { hidden_dim: 8, step: 1e-5, ..Default::default() };
    let report = grad_check(&graph, &pool, &anomalies, &settings, 0).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let ok = report.max_rel_err() <= 1e-4 && elapsed < 60.0;
    verdict("1 gradient-correctness", ok);
    assert!(
        report.max_rel_err() <= 1e-4,
        "max relative error {:.3e} in\n{}",
        report.max_rel_err(),
        report.render()
    );
    assert!(elapsed < 60.0, "gradient check took {elapsed:.1}s");
}

// ---------------------------------------------------------------- criterion 2

fn random_trial_graph(n: usize, d: usize, avg_deg: f64, seed: u64) -> Graph {
    use rand::Rng;
    let mut rng = stream(seed, StreamId::BenchmarkGraph);
    let features: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let p = (avg_deg / (n as f64 - 1.0)).min(1.0);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, d, features, &edges).unwrap()
}

/// Replay every delta of an injection against the evolving graph state and
/// assert the operator contracts exactly.
fn audit_injection(g: &Graph, pool: &[u32], cfg: &PerturbConfig, seed: u64) {
    use gadforge::perturb::{apply_edge_delta, apply_feature_delta, subset_bound};

    let mut rng = stream(seed, StreamId::Injection);
    let (after, ledger) = inject_all(g, pool, cfg, &mut rng).unwrap();

    let (_, sigma_deg) = gadforge::degree_stats(g).unwrap();
    let stats = gadforge::feature_stats(g).unwrap();
    let n = g.node_count();

    // target sets: disjoint, inside the pool, exactly s each
    let mut all_targets = std::collections::BTreeSet::new();
    for record in &ledger.types {
        assert_eq!(record.targets.len(), cfg.per_type);
        for &v in &record.targets {
            assert!(pool.binary_search(&v).is_ok(), "target {v} outside the pool");
            assert!(all_targets.insert(v), "target {v} perturbed by two types");
        }
    }

    let mut work = g.to_work();
    for record in &ledger.types {
        for delta in &record.deltas {
            let v = delta.node;
            match record.kind {
                TauKind::DegreeBoost => {
                    let e = delta.edge.as_ref().unwrap();
                    let deg_before = work.degree(v);
                    let cap = n - 1 - deg_before;
                    let low = ((3.0 * sigma_deg).round() as usize).max(1);
                    let high = ((5.0 * sigma_deg).round() as usize).max(low);
                    let count = e.added.len();
                    assert!(
                        count >= low.min(cap) && count <= high.min(cap),
                        "degree boost added {count} edges, bounds [{low},{high}] cap {cap}"
                    );
                    check_new_edges(&work, v, &e.added);
                    assert!(e.removed.is_empty());
                    apply_edge_delta(&mut work, e);
                    assert_eq!(work.degree(v), deg_before + count);
                }
                TauKind::DissimilarLink => {
                    let e = delta.edge.as_ref().unwrap();
                    assert_eq!(e.added.len(), 1);
                    assert_eq!(e.candidates.len(), cfg.candidate_pool.min(n - 1));
                    let donor = e.added[0].0;
                    // brute force over the recorded candidate set
                    let mut best: Option<(f64, u32)> = None;
                    for &u in &e.candidates {
                        if work.has_edge(v, u) {
                            continue;
                        }
                        let dist = work.feature_distance(v, u);
                        let better = match best {
                            None => true,
                            Some((bd, bu)) => dist > bd || (dist == bd && u < bu),
                        };
                        if better {
                            best = Some((dist, u));
                        }
                    }
                    assert_eq!(donor, best.unwrap().1, "dissimilar-link donor mismatch");
                    check_new_edges(&work, v, &e.added);
                    apply_edge_delta(&mut work, e);
                }
                TauKind::Rewire => {
                    let e = delta.edge.as_ref().unwrap();
                    let deg_before = work.degree(v);
                    assert!(deg_before >= 1);
                    assert_eq!(e.removed.len(), deg_before);
                    assert_eq!(e.added.len(), deg_before);
                    for &(u, t) in &e.removed {
                        assert_eq!(t, v);
                        assert!(work.has_edge(u, v), "removed edge ({u},{v}) not present");
                    }
                    apply_edge_delta(&mut work, e);
                    assert_eq!(work.degree(v), deg_before, "rewire changed the degree");
                }
                TauKind::FeatureSwap => {
                    let f = delta.feature.as_ref().unwrap();
                    let donor = f.donor.unwrap();
                    let mut best: Option<(f64, u32)> = None;
                    for &u in &f.candidates {
                        let dist = work.feature_distance(v, u);
                        let better = match best {
                            None => true,
                            Some((bd, bu)) => dist > bd || (dist == bd && u < bu),
                        };
                        if better {
                            best = Some((dist, u));
                        }
                    }
                    assert_eq!(donor, best.unwrap().1, "feature-swap donor mismatch");
                    assert_eq!(f.replacement.as_deref().unwrap(), work.feature_row(donor));
                    let edges_before: Vec<u32> = work.neighbors(v).collect();
                    apply_feature_delta(&mut work, f);
                    let edges_after: Vec<u32> = work.neighbors(v).collect();
                    assert_eq!(edges_before, edges_after, "feature swap touched edges");
                }
                TauKind::FeatureNoise => {
                    let f = delta.feature.as_ref().unwrap();
                    let beta = f.beta.unwrap();
                    assert!((3.0..5.0).contains(&beta));
                    let bound = subset_bound(g.feature_dim());
                    assert!(
                        f.updates.len() >= 2 && f.updates.len() <= bound,
                        "|S| = {} outside [2,{bound}]",
                        f.updates.len()
                    );
                    let mut dims: Vec<usize> = f.updates.iter().map(|(i, _)| *i).collect();
                    let row = work.feature_row(v).to_vec();
                    for &(i, new) in &f.updates {
                        assert!(i < g.feature_dim());
                        assert_eq!(new, row[i] + beta * stats.std[i], "feature bump mismatch");
                    }
                    dims.dedup();
                    assert_eq!(dims.len(), f.updates.len(), "duplicate dims in S");
                    apply_feature_delta(&mut work, f);
                }
            }
        }
    }
    assert_eq!(work.freeze(), after, "replayed deltas disagree with the returned graph");
}

fn check_new_edges(work: &gadforge::WorkGraph, v: u32, added: &[(u32, u32)]) {
    let mut seen = std::collections::BTreeSet::new();
    for &(u, t) in added {
        assert_eq!(t, v);
        assert_ne!(u, v, "self-loop added");
        assert!(!work.has_edge(u, v), "edge ({u},{v}) already present");
        assert!(seen.insert(u), "duplicate endpoint {u}");
    }
}

#[test]
fn c2_perturbation_invariants() {
    use rand::Rng;
    let mut meta = stream(2024, StreamId::BenchmarkPlant);
    for trial in 0..1000u64 {
        let n = meta.gen_range(30..=200);
        let d = meta.gen_range(2..=24);
        let avg_deg = meta.gen_range(2.0..5.0);
        let g = random_trial_graph(n, d, avg_deg, trial);
        let pool: Vec<u32> = (0..n as u32).collect();
        let cfg = PerturbConfig {
            per_type: meta.gen_range(1..=4),
            candidate_pool: if trial % 3 == 0 { meta.gen_range(4..32) } else { 4096 },
            ..Default::default()
        };
        audit_injection(&g, &pool, &cfg, trial);
    }
    verdict("2 perturbation-invariants", true);
}

// ---------------------------------------------------------------- criterion 3

fn auroc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 1.0;
            wins += if scores[i] > scores[j] {
                1.0
            } else if scores[i] == scores[j] {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / pairs
}

fn auprc_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let total_pos = labels.iter().filter(|y| **y).count() as f64;
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &t in &thresholds {
        let mut tp = 0.0;
        let mut fp = 0.0;
        for (s, &y) in scores.iter().zip(labels) {
            if *s >= t {
                if y {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        let precision = tp / (tp + fp);
        let recall = tp / total_pos;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

#[test]
fn c3_metric_oracle_equivalence() {
    use rand::Rng;
    let mut rng = stream(33, StreamId::BenchmarkPlant);
    let mut worst_roc: f64 = 0.0;
    let mut worst_pr: f64 = 0.0;
    for trial in 0..1000 {
        let n = rng.gen_range(2..=12);
        let tie_heavy = trial % 2 == 0;
        let (scores, labels) = loop {
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    if tie_heavy {
                        (rng.gen_range(0..=8) as f64) / 8.0
                    } else {
                        rng.gen_range(0.0..1.0)
                    }
                })
                .collect();
            let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let pos = labels.iter().filter(|y| **y).count();
            if pos >= 1 && pos < n {
                break (scores, labels);
            }
        };
        let set = ScoreSet::new((0..n as u32).collect(), scores.clone(), labels.clone()).unwrap();
        worst_roc = worst_roc.max((auroc(&set).unwrap() - auroc_oracle(&scores, &labels)).abs());
        worst_pr = worst_pr.max((auprc(&set).unwrap() - auprc_oracle(&scores, &labels)).abs());
    }
    let ok = worst_roc <= 1e-12 && worst_pr <= 1e-12;
    verdict("3 metric-oracle-equivalence", ok);
    assert!(ok, "worst auroc diff {worst_roc:.2e}, worst auprc diff {worst_pr:.2e}");
}

// ---------------------------------------------------------------- criterion 4

#[test]
fn c4_objective_algebra() {
    // (a) gradient additivity in f64 on fixed batches
    let bench = BenchmarkConfig {
        communities: 2,
        nodes_per_community: 40,
        p_intra: 0.12,
        p_inter: 0.02,
        feature_dim: 8,
        anomaly_fraction: 0.1,
        ..Default::default()
    };
    let (graph, labels) = gen_benchmark(&bench, 4).unwrap();
    let anomalies = labels.anomalies();
    let pool: Vec<u32> =
        (0..graph.node_count() as u32).filter(|&v| labels.get(v) == Label::Normal).collect();
    let dims = ModelDims { input_dim: 8, hidden_dim: 16, synth_heads: 5 };
    let mut init_rng = stream(4, StreamId::ParamInit);
    let params: ParamSet<f64> = ParamSet::init(&dims, &mut init_rng);

    let mut inj = stream(4, StreamId::Injection);
    let (perturbed, ledger) =
        inject_all(&graph, &pool, &PerturbConfig { per_type: 4, ..Default::default() }, &mut inj)
            .unwrap();
    let mut srng = stream(4, StreamId::SynthBatch);
    let batches = sample_synth_batches(&ledger, &pool, false, &mut srng).unwrap();
    let mut rrng = stream(4, StreamId::RealBatch);
    let real = sample_real_batch(&anomalies, &pool, 16, &mut rrng).unwrap();

    let lambda = 4.0;
    let total =
        losses_and_grads(&params, Some((&graph, &real)), Some((&perturbed, &batches)), lambda)
            .unwrap()
            .grads;
    let g_real = losses_and_grads(&params, Some((&graph, &real)), None, 0.0).unwrap().grads;
    let g_synth =
        losses_and_grads(&params, None, Some((&perturbed, &batches)), 1.0).unwrap().grads;
    let mut combined = g_real;
    combined.axpy(lambda, &g_synth);
    let rel = total.max_rel_diff(&combined, 1e-9);

    // (b) a lambda = 0 full-phase step is bit-identical to a real-only step
    let (g1000, l1000, split) = default_setup(4);
    let base = TrainConfig {
        enable_warmup: false,
        full_epochs: 1,
        lambda: 0.0,
        seed: 4,
        ..Default::default()
    };
    let mut no_reg = base.clone();
    no_reg.enable_regularizer = false;
    let a = train::<f32>(&g1000, &l1000, &split, &base).unwrap();
    let b = train::<f32>(&g1000, &l1000, &split, &no_reg).unwrap();
    let bits_a = checkpoint_bytes(&Checkpoint {
        model: a.final_model,
        seed: 4,
        rng_positions: vec![],
    });
    let bits_b = checkpoint_bytes(&Checkpoint {
        model: b.final_model,
        seed: 4,
        rng_positions: vec![],
    });

    let ok = rel <= 1e-6 && bits_a == bits_b;
    verdict("4 objective-algebra", ok);
    assert!(rel <= 1e-6, "gradient additivity broke: max relative diff {rel:.2e}");
    assert_eq!(bits_a, bits_b, "lambda=0 step differs from real-only step");
}

// ---------------------------------------------------------------- criterion 5

#[test]
fn c5_batch_composition() {
    let (graph, _, split) = default_setup(5);
    let cfg = PerturbConfig::default(); // s = 32
    let mut streams = TrainStreams::new(5);
    for _ in 0..100 {
        let (_, ledger) =
            inject_all(&graph, &split.unlabeled_pool, &cfg, &mut streams.injection).unwrap();
        let batches =
            sample_synth_batches(&ledger, &split.unlabeled_pool, false, &mut streams.synth_batch)
                .unwrap();
        assert_eq!(batches.len(), 5);
        for b in &batches {
            assert_eq!(b.nodes.len(), 64, "synthetic batch must hold 2s nodes");
            assert_eq!(b.labels.iter().filter(|y| **y).count(), 32);
            assert_eq!(b.labels.iter().filter(|y| !**y).count(), 32);
        }
        let real = sample_real_batch(
            &split.labeled_anomalies,
            &split.unlabeled_pool,
            512,
            &mut streams.real_batch,
        )
        .unwrap();
        assert_eq!(real.nodes.len(), 512);
        assert_eq!(real.labels.iter().filter(|y| **y).count(), 256);
        assert_eq!(real.labels.iter().filter(|y| !**y).count(), 256);
    }
    verdict("5 batch-composition", true);
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn c6_train_determinism() {
    let bin = env!("CARGO_BIN_EXE_gadforge");
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        benchmark: BenchmarkConfig {
            communities: 2,
            nodes_per_community: 150,
            p_intra: 0.05,
            p_inter: 0.005,
            feature_dim: 8,
            anomaly_fraction: 0.08,
            ..Default::default()
        },
        runs: 2,
        m: 8,
        warm_epochs: 5,
        full_epochs: 8,
        real_batch_size: 64,
        hidden_dim: 16,
        per_type: 8,
        jobs: 2,
        ..Default::default()
    };
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, cfg.to_json_pretty()).unwrap();

    let run = |out: &str| {
        let status = std::process::Command::new(bin)
            .args(["train", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(dir.path().join(out))
            .status()
            .expect("spawn gadforge");
        assert!(status.success(), "train run failed");
    };
    run("a");
    run("b");

    let mut ok = true;
    for file in
        ["metrics.json", "config.json", "seed_0/metrics.json", "seed_1/metrics.json", "seed_0/checkpoint_best", "seed_1/checkpoint_best"]
    {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        if a != b {
            ok = false;
            eprintln!("mismatch in {file}");
        }
    }
    verdict("6 train-determinism", ok);
    assert!(ok, "train outputs are not byte-identical");
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn c7_end_to_end_detection() {
    let started = Instant::now();
    let mut aurocs = Vec::new();
    for seed in 0..5u64 {
        let (graph, labels, split) = default_setup(seed);
        let cfg = TrainConfig { seed, ..Default::default() };
        let outcome = train::<f32>(&graph, &labels, &split, &cfg).unwrap();
        aurocs.push(outcome.test_auroc);
    }
    let mean = aurocs.iter().sum::<f64>() / aurocs.len() as f64;
    let elapsed = started.elapsed().as_secs_f64();
    let ok = mean >= 0.90 && elapsed < 600.0;
    verdict("7 end-to-end-detection", ok);
    assert!(mean >= 0.90, "mean test auroc {mean:.4} below 0.90 (per-seed {aurocs:?})");
    assert!(elapsed < 600.0, "five runs took {elapsed:.0}s");
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn c8_ablation_direction() {
    let mut full_scores = Vec::new();
    let mut base_scores = Vec::new();
    for seed in 0..8u64 {
        let (graph, labels, split) = default_setup(seed);
        let full_cfg = TrainConfig { seed, ..Default::default() };
        let mut base_cfg = full_cfg.clone();
        base_cfg.enable_warmup = false;
        base_cfg.enable_regularizer = false;
        full_scores.push(train::<f32>(&graph, &labels, &split, &full_cfg).unwrap().test_auroc);
        base_scores.push(train::<f32>(&graph, &labels, &split, &base_cfg).unwrap().test_auroc);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mf, mb) = (mean(&full_scores), mean(&base_scores));
    let ok = mf >= mb;
    verdict("8 ablation-direction", ok);
    assert!(
        ok,
        "full model mean auroc {mf:.4} fell below the baseline {mb:.4}\nfull: {full_scores:?}\nbase: {base_scores:?}"
    );
}

// ---------------------------------------------------------------- criterion 9

#[test]
fn c9_warmup_efficacy() {
    for seed in 0..5u64 {
        let (graph, _, split) = default_setup(seed);
        let cfg = TrainConfig { seed, ..Default::default() };
        let dims = cfg.dims_for(&graph);
        let mut rng = stream(seed, StreamId::ParamInit);
        let mut model: ModelParams<f32> = ModelParams::init(&dims, &mut rng);
        let mut streams = TrainStreams::new(seed);
        let mut log = RunLog::default();
        run_warmup(&graph, &split, &cfg, &mut model, &mut streams, &mut log).unwrap();
        let losses: Vec<f64> = log
            .records
            .iter()
            .filter(|r| r.phase == Phase::Warmup)
            .filter_map(|r| r.l_synth)
            .collect();
        assert_eq!(losses.len(), cfg.warm_epochs);
        let first = losses[0];
        let tail = &losses[losses.len() - 10..];
        let tail_mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!(
            tail_mean < 0.5 * first,
            "seed {seed}: final-10 mean {tail_mean:.3} not under half of epoch-1 {first:.3}"
        );
    }
    verdict("9 warmup-efficacy", true);
}

// ---------------------------------------------------------------- criterion 10

/// Optional replication against a converted Weibo dataset. Not gated:
/// dataset acquisition is external. Point GADFORGE_WEIBO at the dataset file
/// and run with `--ignored` to execute the paper protocol (m = 30, 1%
/// contamination, 8:1:1, 16 runs, lambda = 4).
#[test]
#[ignore = "needs the Weibo dataset converted to the text format (set GADFORGE_WEIBO)"]
fn c10_optional_weibo_replication() {
    let path = match std::env::var("GADFORGE_WEIBO") {
        Ok(p) => p,
        Err(_) => {
            verdict("10 weibo-replication", true);
            println!("skipped: GADFORGE_WEIBO not set");
            return;
        }
    };
    let (graph, labels) = gadforge::load_graph(&path).unwrap();
    let mut aurocs = Vec::new();
    for seed in 0..16u64 {
        let split = make_weak_split(&labels, 30, 0.01, (0.8, 0.1, 0.1), seed).unwrap();
        let cfg = TrainConfig { seed, ..Default::default() };
        let outcome = train::<f32>(&graph, &labels, &split, &cfg).unwrap();
        aurocs.push(outcome.test_auroc);
    }
    let mean = aurocs.iter().sum::<f64>() / aurocs.len() as f64;
    let ok = (mean - 0.962).abs() <= 0.03;
    verdict("10 weibo-replication", ok);
    assert!(ok, "mean auroc {mean:.4} outside 0.962 +/- 0.03");
}
