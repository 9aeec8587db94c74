//! Generate a planted benchmark dataset and write it in the text format.
//!
//! Usage: cargo run --example generate_benchmark [-- <out_path> [seed]]

use gadforge::{degree_stats, gen_benchmark, save_graph, BenchmarkConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "benchmark.gad".to_string());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);

    let cfg = BenchmarkConfig::default();
    let (graph, labels) = gen_benchmark(&cfg, seed)?;
    let (deg_mean, deg_std) = degree_stats(&graph)?;
    println!(
        "generated {} nodes, {} edges, {} anomalies (degree mean {:.2}, std {:.2})",
        graph.node_count(),
        graph.edge_count(),
        labels.anomalies().len(),
        deg_mean,
        deg_std
    );
    save_graph(&graph, &labels, &out)?;
    println!("wrote {out}");
    Ok(())
}
