//! Train briefly, then export node embeddings with role tags (normal, real
//! anomaly, synthetic type) for external visualization.
//!
//! Usage: cargo run --release --example export_embeddings [-- <out.csv>]

use gadforge::nn::encode;
use gadforge::{
    export_embeddings, gen_benchmark, inject_all, make_weak_split, stream, train, BenchmarkConfig,
    Mat, StreamId, TrainConfig,
};

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "embeddings.csv".to_string());

    let bench = BenchmarkConfig {
        communities: 3,
        nodes_per_community: 100,
        feature_dim: 12,
        ..Default::default()
    };
    let (graph, labels) = gen_benchmark(&bench, 2)?;
    let split = make_weak_split(&labels, 10, 0.01, (0.8, 0.1, 0.1), 2)?;
    let cfg = TrainConfig {
        warm_epochs: 40,
        full_epochs: 60,
        real_batch_size: 64,
        hidden_dim: 32,
        seed: 2,
        ..Default::default()
    };
    let outcome = train::<f32>(&graph, &labels, &split, &cfg)?;

    // embed a freshly perturbed view so synthetic types appear in the tags
    let mut rng = stream(99, StreamId::Injection);
    let (perturbed, ledger) =
        inject_all(&graph, &split.unlabeled_pool, &cfg.perturb, &mut rng)?;
    let h32 = encode(&perturbed, &outcome.best_model.params);
    let h64 = Mat::<f64> {
        rows: h32.rows,
        cols: h32.cols,
        data: h32.data.iter().map(|x| *x as f64).collect(),
    };
    export_embeddings(&h64, &labels, Some(&ledger), &out)?;
    println!(
        "wrote {out}: {} rows x {} dims (tags: normal / anomaly / synth1..synth5)",
        h64.rows, h64.cols
    );
    Ok(())
}
