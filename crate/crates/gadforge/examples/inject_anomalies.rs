//! Inject the five synthetic anomaly types into a graph's unlabeled pool and
//! inspect the ground-truth ledger.
//!
//! Usage: cargo run --example inject_anomalies

use gadforge::{
    gen_benchmark, inject_all, make_weak_split, stream, BenchmarkConfig, PerturbConfig, StreamId,
};

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let bench = BenchmarkConfig {
        communities: 3,
        nodes_per_community: 100,
        feature_dim: 12,
        ..Default::default()
    };
    let (graph, labels) = gen_benchmark(&bench, 1)?;
    let split = make_weak_split(&labels, 10, 0.01, (0.8, 0.1, 0.1), 1)?;

    let cfg = PerturbConfig { per_type: 8, ..Default::default() };
    let mut rng = stream(1, StreamId::Injection);
    let (perturbed, ledger) = inject_all(&graph, &split.unlabeled_pool, &cfg, &mut rng)?;

    println!(
        "clean graph: {} edges; perturbed graph: {} edges",
        graph.edge_count(),
        perturbed.edge_count()
    );
    for record in &ledger.types {
        let edge_changes: usize = record
            .deltas
            .iter()
            .filter_map(|d| d.edge.as_ref())
            .map(|e| e.added.len() + e.removed.len())
            .sum();
        let feature_changes = record.deltas.iter().filter(|d| d.feature.is_some()).count();
        println!(
            "{}: {} targets, {} edge changes, {} feature rewrites",
            record.kind,
            record.targets.len(),
            edge_changes,
            feature_changes
        );
    }
    std::fs::write("ledger.json", ledger.to_json())?;
    println!("wrote ledger.json");
    Ok(())
}
