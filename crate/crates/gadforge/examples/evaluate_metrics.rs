//! Exact AUROC / AUPRC on a hand-made score set, including tie handling,
//! plus multi-run aggregation.
//!
//! Usage: cargo run --example evaluate_metrics

use gadforge::{aggregate, auprc, auroc, RunMetrics, ScoreSet};

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let scores = vec![0.95, 0.80, 0.80, 0.55, 0.40, 0.40, 0.10];
    let labels = vec![true, true, false, false, true, false, false];
    let set = ScoreSet::new((0..7).collect(), scores, labels)?;
    println!("auroc = {:.6}", auroc(&set)?);
    println!("auprc = {:.6}", auprc(&set)?);

    let runs: Vec<RunMetrics> = [0.91, 0.94, 0.89, 0.96]
        .iter()
        .enumerate()
        .map(|(i, &a)| RunMetrics {
            variant: "demo".into(),
            seed: i as u64,
            auroc: a,
            auprc: a - 0.2,
            epochs: 300,
            wall_s: 0.0,
        })
        .collect();
    let agg = aggregate(&runs)?;
    println!(
        "aggregated over {} runs: auroc {:.3} +/- {:.3}, auprc {:.3} +/- {:.3}",
        agg.runs, agg.auroc_mean, agg.auroc_std, agg.auprc_mean, agg.auprc_std
    );
    Ok(())
}
