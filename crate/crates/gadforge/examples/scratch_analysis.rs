//! scratch diagnostics (not part of the deliverable)
use gadforge::*;

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let bench = BenchmarkConfig::default();
    let mut full_scores = Vec::new();
    let mut base_scores = Vec::new();
    for seed in 0..8u64 {
        let (graph, labels) = gen_benchmark(&bench, seed)?;
        let split = make_weak_split(&labels, 30, 0.01, (0.8, 0.1, 0.1), seed)?;
        let cfg = TrainConfig { seed, ..Default::default() };
        let t0 = std::time::Instant::now();
        let full: trainer::TrainOutcome<f32> = train(&graph, &labels, &split, &cfg)?;
        let mut bcfg = cfg.clone();
        bcfg.enable_warmup = false;
        bcfg.enable_regularizer = false;
        let base: trainer::TrainOutcome<f32> = train(&graph, &labels, &split, &bcfg)?;
        println!("seed {seed}: full={:.4} baseline={:.4}  ({:.1}s)", full.test_auroc, base.test_auroc, t0.elapsed().as_secs_f64());
        full_scores.push(full.test_auroc);
        base_scores.push(base.test_auroc);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("full mean(0..5)={:.4}  mean(0..8)={:.4}", mean(&full_scores[..5]), mean(&full_scores));
    println!("base mean(0..8)={:.4}", mean(&base_scores));
    Ok(())
}
