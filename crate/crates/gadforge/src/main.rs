//! Command-line front end. All logic lives in the library; this binary
//! resolves a config (JSON file plus flag overrides), dispatches, and maps
//! error categories onto distinct exit codes.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use gadforge::config::RunConfig;
use gadforge::harness::{run_ablation, run_eval, run_training, variant_name};
use gadforge::{
    gen_benchmark, inject_all, make_weak_split, save_graph, stream, Error, GradCheckSettings,
    Result, StreamId,
};

#[derive(Parser)]
#[command(
    name = "gadforge",
    version,
    about = "Weakly supervised graph anomaly detection with synthetic perturbation tasks",
    after_help = "Exit codes: 3 config, 4 i/o, 5 parse, 6 contract, 7 split, 8 injection, 9 numeric, 10 metric."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Inclusive seed range written as `A..B`.
#[derive(Debug, Clone, Copy)]
struct SeedRange(u64, u64);

impl std::str::FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected A..B, got `{s}`"))?;
        let a: u64 = a.trim().parse().map_err(|_| format!("bad seed `{a}`"))?;
        let b: u64 = b.trim().parse().map_err(|_| format!("bad seed `{b}`"))?;
        if b < a {
            return Err(format!("empty seed range {a}..{b}"));
        }
        Ok(SeedRange(a, b))
    }
}

/// Config file plus per-key overrides. Every key of the JSON config has a
/// flag; unset flags leave the file (or built-in) value in place.
#[derive(Args, Debug, Clone, Default)]
struct ConfigOverrides {
    /// JSON config file; the flags below override its values
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Dataset file in the text format [default: generate the benchmark]
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Base seed; run r uses seed+r [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Inclusive seed range A..B (sets base seed and run count)
    #[arg(long, value_name = "A..B")]
    seeds: Option<SeedRange>,
    /// Number of runs aggregated into the report [default: 16]
    #[arg(long)]
    runs: Option<usize>,
    /// Weight of the synthetic loss in the joint objective [default: 4]
    #[arg(long)]
    lambda: Option<f64>,
    /// Labeled anomalies kept in the train split [default: 30]
    #[arg(long)]
    m: Option<usize>,
    /// Hidden-anomaly fraction of the unlabeled train pool [default: 0.01]
    #[arg(long)]
    contamination: Option<f64>,
    /// Skip the warm-up phase
    #[arg(long)]
    no_warmup: bool,
    /// Drop the synthetic term from the full-phase objective
    #[arg(long)]
    no_regularizer: bool,
    /// Disable one anomaly type (1-5); repeatable
    #[arg(long = "drop-tau", value_name = "K")]
    drop_tau: Vec<usize>,
    /// One shared synthetic head instead of per-type heads
    #[arg(long)]
    single_head: bool,
    /// Worker threads fanning out seeds or variants [default: 1]
    #[arg(long)]
    jobs: Option<usize>,
    /// Nodes perturbed per anomaly type [default: 32]
    #[arg(long)]
    per_type: Option<usize>,
    /// Candidate set size for dissimilarity ranking [default: 4096]
    #[arg(long)]
    candidate_pool: Option<usize>,
    /// Real batch size (half anomalies, half pool) [default: 512]
    #[arg(long)]
    real_batch_size: Option<usize>,
    /// Warm-up epochs [default: 100]
    #[arg(long)]
    warm_epochs: Option<usize>,
    /// Full-phase epochs [default: 200]
    #[arg(long)]
    full_epochs: Option<usize>,
    /// Joint updates per full-phase epoch [default: 1]
    #[arg(long)]
    steps_per_epoch: Option<usize>,
    /// Adam learning rate [default: 0.001]
    #[arg(long)]
    lr: Option<f64>,
    /// L2 regularization weight on non-bias tensors [default: 0.01]
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Embedding and head hidden width [default: 64]
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Z-score features before use [default: off]
    #[arg(long)]
    zscore: bool,
    /// Zero the Adam moments between phases [default: off]
    #[arg(long)]
    reset_adam: bool,
    /// Train/val/test ratios as three comma-separated values [default: 0.8,0.1,0.1]
    #[arg(long, value_name = "T,V,E", value_delimiter = ',', num_args = 3)]
    ratios: Option<Vec<f64>>,
    /// Benchmark: community count [default: 4]
    #[arg(long)]
    communities: Option<usize>,
    /// Benchmark: nodes per community [default: 250]
    #[arg(long)]
    nodes_per_community: Option<usize>,
    /// Benchmark: intra-community edge probability [default: 0.02]
    #[arg(long)]
    p_intra: Option<f64>,
    /// Benchmark: inter-community edge probability [default: 0.001]
    #[arg(long)]
    p_inter: Option<f64>,
    /// Benchmark: feature dimension [default: 16]
    #[arg(long)]
    dim: Option<usize>,
    /// Benchmark: planted anomaly fraction [default: 0.05]
    #[arg(long)]
    anomaly_fraction: Option<f64>,
}

impl ConfigOverrides {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(data) = &self.data {
            cfg.dataset = Some(data.clone());
        }
        if let Some(SeedRange(a, b)) = self.seeds {
            cfg.seed = a;
            cfg.runs = (b - a + 1) as usize;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(runs) = self.runs {
            cfg.runs = runs;
        }
        macro_rules! set {
            ($($field:ident <- $opt:ident),* $(,)?) => {
                $(if let Some(v) = self.$opt { cfg.$field = v; })*
            };
        }
        set! {
            lambda <- lambda, m <- m, contamination <- contamination,
            per_type <- per_type, candidate_pool <- candidate_pool,
            real_batch_size <- real_batch_size, warm_epochs <- warm_epochs,
            full_epochs <- full_epochs, steps_per_epoch <- steps_per_epoch,
            lr <- lr, weight_decay <- weight_decay, hidden_dim <- hidden_dim,
            jobs <- jobs,
        }
        if self.no_warmup {
            cfg.enable_warmup = false;
        }
        if self.no_regularizer {
            cfg.enable_regularizer = false;
        }
        if self.single_head {
            cfg.specialized_heads = false;
        }
        if self.zscore {
            cfg.zscore_features = true;
        }
        if self.reset_adam {
            cfg.reset_adam_between_phases = true;
        }
        for tau in &self.drop_tau {
            if !cfg.drop_taus.contains(tau) {
                cfg.drop_taus.push(*tau);
            }
        }
        if let Some(r) = &self.ratios {
            cfg.train_ratio = r[0];
            cfg.val_ratio = r[1];
            cfg.test_ratio = r[2];
        }
        {
            let b = &mut cfg.benchmark;
            if let Some(v) = self.communities {
                b.communities = v;
            }
            if let Some(v) = self.nodes_per_community {
                b.nodes_per_community = v;
            }
            if let Some(v) = self.p_intra {
                b.p_intra = v;
            }
            if let Some(v) = self.p_inter {
                b.p_inter = v;
            }
            if let Some(v) = self.dim {
                b.feature_dim = v;
            }
            if let Some(v) = self.anomaly_fraction {
                b.anomaly_fraction = v;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a planted benchmark dataset file
    Gen {
        #[command(flatten)]
        overrides: ConfigOverrides,
        /// Output dataset path
        #[arg(long, default_value = "benchmark.gad")]
        out: PathBuf,
    },
    /// Inject synthetic anomalies into the unlabeled pool; write the
    /// perturbed graph and the ground-truth ledger
    Inject {
        #[command(flatten)]
        overrides: ConfigOverrides,
        /// Output directory (perturbed.gad, ledger.json)
        #[arg(long, default_value = "inject_out")]
        out: PathBuf,
    },
    /// Two-phase training over the configured seeds; writes one run
    /// directory per seed plus the aggregated metrics.json
    Train {
        #[command(flatten)]
        overrides: ConfigOverrides,
        /// Output directory
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Score a saved checkpoint on a reconstructed test split
    Eval {
        #[command(flatten)]
        overrides: ConfigOverrides,
        /// Checkpoint file written by `train`
        #[arg(long)]
        checkpoint: PathBuf,
        /// Write the eval report here as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also export node embeddings as CSV
        #[arg(long, value_name = "CSV")]
        export_embeddings: Option<PathBuf>,
    },
    /// Run the ablation grid, leave-one-type-out, single-head and lambda
    /// sweep variants; writes metrics.csv and aggregated.json
    Ablate {
        #[command(flatten)]
        overrides: ConfigOverrides,
        /// Output directory
        #[arg(long, default_value = "ablation")]
        out: PathBuf,
    },
    /// Verify analytic gradients against central finite differences (f64)
    Gradcheck {
        /// Node count of the check graph [default: 30]
        #[arg(long, default_value_t = 30)]
        nodes: usize,
        /// Feature dimension of the check graph [default: 8]
        #[arg(long, default_value_t = 8)]
        dim: usize,
        /// Hidden width of the down-sized model [default: 8]
        #[arg(long, default_value_t = 8)]
        hidden_dim: usize,
        /// Joint-loss weight [default: 4]
        #[arg(long, default_value_t = 4.0)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Central-difference step [default: 1e-5]
        #[arg(long, default_value_t = 1e-5)]
        step: f64,
        /// Coordinates checked per tensor; 0 = all [default: 0]
        #[arg(long, default_value_t = 0)]
        max_coords: usize,
        /// Fail (exit 9) if any group exceeds this relative error
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn cmd_gen(overrides: &ConfigOverrides, out: &PathBuf) -> Result<()> {
    let cfg = overrides.resolve()?;
    let (graph, labels) = gen_benchmark(&cfg.benchmark, cfg.seed)?;
    save_graph(&graph, &labels, out)?;
    println!(
        "wrote {} ({} nodes, {} edges, {} anomalies)",
        out.display(),
        graph.node_count(),
        graph.edge_count(),
        labels.anomalies().len()
    );
    Ok(())
}

fn cmd_inject(overrides: &ConfigOverrides, out: &PathBuf) -> Result<()> {
    let cfg = overrides.resolve()?;
    let (graph, labels) = cfg.load_data(cfg.seed)?;
    let split = make_weak_split(&labels, cfg.m, cfg.contamination, cfg.ratios(), cfg.seed)?;
    let mut rng = stream(cfg.seed, StreamId::Injection);
    let (perturbed, ledger) =
        inject_all(&graph, &split.unlabeled_pool, &cfg.perturb_config(), &mut rng)?;
    std::fs::create_dir_all(out)?;
    save_graph(&perturbed, &labels, out.join("perturbed.gad"))?;
    std::fs::write(out.join("ledger.json"), ledger.to_json())?;
    println!(
        "wrote {}/perturbed.gad and ledger.json ({} perturbed nodes)",
        out.display(),
        ledger.all_targets().len()
    );
    Ok(())
}

fn cmd_train(overrides: &ConfigOverrides, out: &PathBuf) -> Result<()> {
    let cfg = overrides.resolve()?;
    let report = run_training(&cfg, out)?;
    println!(
        "variant {}: auroc {:.4} +/- {:.4}, auprc {:.4} +/- {:.4} over {} runs -> {}",
        report.variant,
        report.auroc_mean,
        report.auroc_std,
        report.auprc_mean,
        report.auprc_std,
        report.runs,
        out.join("metrics.json").display()
    );
    Ok(())
}

fn cmd_eval(
    overrides: &ConfigOverrides,
    checkpoint: &PathBuf,
    out: Option<&PathBuf>,
    embeddings: Option<&PathBuf>,
) -> Result<()> {
    let cfg = overrides.resolve()?;
    let seed = cfg.seed;
    let report = run_eval(
        &cfg,
        checkpoint,
        seed,
        out.map(|p| p.as_path()),
        embeddings.map(|p| p.as_path()),
    )?;
    println!(
        "seed {}: test auroc {:.4}, auprc {:.4} (checkpoint step {})",
        report.seed, report.test_auroc, report.test_auprc, report.checkpoint_step
    );
    Ok(())
}

fn cmd_ablate(overrides: &ConfigOverrides, out: &PathBuf) -> Result<()> {
    let cfg = overrides.resolve()?;
    let aggregates = run_ablation(&cfg, out)?;
    for a in &aggregates {
        println!(
            "{:<16} auroc {:.4} +/- {:.4}  auprc {:.4} +/- {:.4} ({} runs)",
            a.variant, a.auroc_mean, a.auroc_std, a.auprc_mean, a.auprc_std, a.runs
        );
    }
    println!("base variant: {}", variant_name(&cfg));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gradcheck(
    nodes: usize,
    dim: usize,
    hidden_dim: usize,
    lambda: f64,
    seed: u64,
    step: f64,
    max_coords: usize,
    tolerance: f64,
) -> Result<()> {
    use gadforge::graph::Label;
    let bench = gadforge::BenchmarkConfig {
        communities: 2,
        nodes_per_community: nodes.div_ceil(2),
        p_intra: 0.2,
        p_inter: 0.05,
        feature_dim: dim,
        anomaly_fraction: 0.1,
        ..Default::default()
    };
    let (graph, labels) = gen_benchmark(&bench, seed)?;
    let anomalies = labels.anomalies();
    let pool: Vec<u32> = (0..graph.node_count() as u32)
        .filter(|&v| labels.get(v) == Label::Normal)
        .collect();
    let settings = GradCheckSettings {
        hidden_dim,
        lambda,
        step,
        max_coords_per_tensor: max_coords,
        ..Default::default()
    };
    let report = gadforge::grad_check(&graph, &pool, &anomalies, &settings, seed)?;
    print!("{}", report.render());
    if report.max_rel_err() > tolerance {
        return Err(Error::Numeric(format!(
            "gradient check failed: max relative error {:.3e} exceeds {tolerance:.1e}",
            report.max_rel_err()
        )));
    }
    println!("gradient check passed (tolerance {tolerance:.1e})");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Gen { overrides, out } => cmd_gen(overrides, out),
        Cmd::Inject { overrides, out } => cmd_inject(overrides, out),
        Cmd::Train { overrides, out } => cmd_train(overrides, out),
        Cmd::Eval { overrides, checkpoint, out, export_embeddings } => {
            cmd_eval(overrides, checkpoint, out.as_ref(), export_embeddings.as_ref())
        }
        Cmd::Ablate { overrides, out } => cmd_ablate(overrides, out),
        Cmd::Gradcheck { nodes, dim, hidden_dim, lambda, seed, step, max_coords, tolerance } => {
            cmd_gradcheck(*nodes, *dim, *hidden_dim, *lambda, *seed, *step, *max_coords, *tolerance)
        }
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
