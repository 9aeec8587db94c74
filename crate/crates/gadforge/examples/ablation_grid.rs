//! Small-scale ablation run: the warm-up/regularizer grid, leave-one-type-out
//! variants, the shared-head variant and the lambda sweep.
//!
//! The full suite at default scale takes a while; this example shrinks the
//! benchmark and epoch counts to finish in a couple of minutes.
//!
//! Usage: cargo run --release --example ablation_grid [-- <n_seeds> [jobs]]

use gadforge::eval::ablation_suite;
use gadforge::{gen_benchmark, BenchmarkConfig, PerturbConfig, TrainConfig};

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n_seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let jobs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);

    let bench = BenchmarkConfig {
        communities: 3,
        nodes_per_community: 80,
        p_intra: 0.05,
        p_inter: 0.004,
        feature_dim: 12,
        ..Default::default()
    };
    let (graph, labels) = gen_benchmark(&bench, 0)?;
    let base = TrainConfig {
        warm_epochs: 30,
        full_epochs: 60,
        real_batch_size: 128,
        hidden_dim: 32,
        perturb: PerturbConfig { per_type: 12, ..Default::default() },
        ..Default::default()
    };
    let seeds: Vec<u64> = (0..n_seeds).collect();
    let outcome = ablation_suite(&graph, &labels, &base, 10, 0.01, &seeds, jobs)?;
    println!("variant            auroc            auprc");
    for a in &outcome.aggregates {
        println!(
            "{:<18} {:.4} +/- {:.4}  {:.4} +/- {:.4}",
            a.variant, a.auroc_mean, a.auroc_std, a.auprc_mean, a.auprc_std
        );
    }
    Ok(())
}
