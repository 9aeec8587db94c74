//! Verify the hand-written backward pass against central finite differences
//! on a small graph, in f64.
//!
//! Usage: cargo run --release --example gradient_check

use gadforge::graph::Label;
use gadforge::{gen_benchmark, grad_check, BenchmarkConfig, GradCheckSettings};

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let bench = BenchmarkConfig {
        communities: 2,
        nodes_per_community: 15,
        p_intra: 0.2,
        p_inter: 0.05,
        feature_dim: 8,
        anomaly_fraction: 0.1,
        ..Default::default()
    };
    let (graph, labels) = gen_benchmark(&bench, 0)?;
    let anomalies = labels.anomalies();
    let pool: Vec<u32> = (0..graph.node_count() as u32)
        .filter(|&v| labels.get(v) == Label::Normal)
        .collect();

    let settings = GradCheckSettings::default(); // d' = 8, every coordinate
    let report = grad_check(&graph, &pool, &anomalies, &settings, 0)?;
    print!("{}", report.render());
    let worst = report.worst_group().expect("nonempty report");
    println!("worst group: {} at {:.3e}", worst.name, worst.max_rel_err);
    Ok(())
}
