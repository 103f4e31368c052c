//! The `hagnn` command line: synth, stats, train, eval, ablate, sweep and
//! gradcheck. Exit codes are 0 on success, 1 on runtime or numeric failure
//! and 2 on usage errors.

mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use manifest::{digest_inputs, InputDigest, RunManifest, MANIFEST_FILE};

use crate::evaluation::{
    ablate, camouflage_report, lambda_sweep, mean_auc_by_key, write_camouflage_report, write_comparison, ComparisonRow,
    FeatureSimilarity, MetricReport, ABLATION_FILE, CAMOUFLAGE_FILE, DEFAULT_LAMBDAS, LAMBDA_SWEEP_FILE,
};
use crate::graph::{
    generate_synthetic, load_dataset, save_dataset, split_nodes, GraphError, MultiRelationGraph, SynthConfig,
    SYNTH_META_FILE,
};
use crate::training::checkpoint;
use crate::training::{
    gradcheck_graph, model_gradcheck, train, write_train_log, TrainConfig, TrainError, Variant, CHECKPOINT_FILE,
    DEFAULT_GRADCHECK_EPS, DEFAULT_GRADCHECK_TOL, TRAIN_LOG_FILE,
};

pub const METRICS_FILE: &str = "metrics.csv";
pub const RESOLVED_CONFIG_FILE: &str = "config.resolved";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Config(_) | GraphError::UnknownRule(_) => Self::usage(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Config(_) | TrainError::UnknownVariant(_) => Self::usage(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hagnn", version, about = "Hierarchical attention GNN for multi-relation fraud detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic multi-relation graph.
    Synth(SynthArgs),
    /// Per-relation camouflage statistics.
    Stats(StatsArgs),
    /// Train a model.
    Train(TrainArgs),
    /// Evaluate a checkpoint on its train/test split.
    Eval(EvalArgs),
    /// Compare V1, V2 and FULL over seeds.
    Ablate(AblateArgs),
    /// Sweep the legit-class loss weight.
    Sweep(SweepArgs),
    /// Central-difference check of every parameter gradient.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    nodes: usize,
    #[arg(long = "fraud-frac", default_value_t = 0.1)]
    fraud_frac: f64,
    #[arg(long, default_value_t = 3)]
    relations: usize,
    #[arg(long, default_value_t = 0.3)]
    camouflage: f64,
    #[arg(long = "feature-camouflage", default_value_t = 0.3)]
    feature_camouflage: f64,
    #[arg(long = "feature-dim", default_value_t = 16)]
    feature_dim: usize,
    #[arg(long = "feature-shift", default_value_t = 1.0)]
    feature_shift: f64,
    /// Comma-separated intra-class edge probabilities, one per relation.
    #[arg(long = "edge-probs", value_delimiter = ',')]
    edge_probs: Option<Vec<f64>>,
    /// Use the same legit–legit probability as fraud–fraud.
    #[arg(long = "no-balance-degrees")]
    no_balance_degrees: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `normalized` or `raw`.
    #[arg(long = "feature-similarity", default_value = "normalized")]
    feature_similarity: String,
}

#[derive(Debug, Args)]
struct RunConfigArgs {
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunConfigArgs {
    fn resolve(&self, seed: Option<u64>) -> Result<TrainConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
                TrainConfig::parse_kv(&text)?
            }
            None => TrainConfig::default(),
        };
        for assignment in &self.set {
            config.apply_assignment(assignment)?;
        }
        if let Some(seed) = seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    config: RunConfigArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    config: RunConfigArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_value = "V1,V2,FULL")]
    variants: Vec<String>,
    /// Concurrent training runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    config: RunConfigArgs,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_GRADCHECK_EPS)]
    eps: f64,
    #[arg(long, default_value_t = DEFAULT_GRADCHECK_TOL)]
    tol: f64,
    #[arg(long, value_delimiter = ',', default_value = "FULL,F")]
    variants: Vec<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Stats(a) => cmd_stats(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Ablate(a) => cmd_ablate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Gradcheck(a) => cmd_gradcheck(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn create_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::runtime(format!("{}: {e}", out.display())))
}

fn load(data: &Path) -> Result<MultiRelationGraph, CliError> {
    let (graph, dropped) = load_dataset(data)?;
    for (name, n) in graph.relation_names().iter().zip(&dropped) {
        if *n > 0 {
            eprintln!("warning: relation {name}: dropped {n} self-pairs");
        }
    }
    graph.validate()?;
    Ok(graph)
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let config = SynthConfig {
        num_nodes: a.nodes,
        fraud_fraction: a.fraud_frac,
        num_relations: a.relations,
        edge_probs: a
            .edge_probs
            .clone()
            .unwrap_or_else(|| SynthConfig::default_edge_probs(a.relations)),
        camouflage_rate: a.camouflage,
        feature_dim: a.feature_dim,
        feature_camouflage_rate: a.feature_camouflage,
        feature_shift: a.feature_shift,
        balance_degrees: !a.no_balance_degrees,
        seed: a.seed,
    };
    config.validate()?;
    create_dir(&a.out)?;
    RunManifest::new("synth", a.seed, &a.out, &config, Vec::new())?.write(&a.out)?;
    let (graph, echo) = generate_synthetic(&config)?;
    save_dataset(&graph, &a.out)?;
    let meta = serde_json::to_string_pretty(&echo).map_err(|e| CliError::runtime(e.to_string()))? + "\n";
    let meta_path = a.out.join(SYNTH_META_FILE);
    fs::write(&meta_path, meta).map_err(|e| CliError::runtime(format!("{}: {e}", meta_path.display())))?;
    println!(
        "wrote {} nodes, {} relations to {}",
        graph.num_nodes(),
        graph.num_relations(),
        a.out.display()
    );
    Ok(())
}

fn cmd_stats(a: &StatsArgs) -> Result<(), CliError> {
    let mode = FeatureSimilarity::parse(&a.feature_similarity)
        .ok_or_else(|| CliError::usage(format!("unknown feature similarity `{}`", a.feature_similarity)))?;
    let inputs = digest_inputs(&[&a.data])?;
    create_dir(&a.out)?;
    let config = serde_json::json!({ "feature_similarity": a.feature_similarity });
    RunManifest::new("stats", 0, &a.out, config, inputs)?.write(&a.out)?;
    let graph = load(&a.data)?;
    let rows = camouflage_report(&graph, mode).map_err(|e| CliError::runtime(e.to_string()))?;
    write_camouflage_report(&a.out.join(CAMOUFLAGE_FILE), graph.num_nodes(), &rows)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    println!("nodes {}", graph.num_nodes());
    println!("{:<16} {:>10} {:>8} {:>8}", "relation", "edges", "label", "feature");
    for row in &rows {
        println!(
            "{:<16} {:>10} {:>8} {:>8}",
            row.relation,
            row.edges,
            fmt(row.label_similarity),
            fmt(row.feature_similarity)
        );
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let config = a.config.resolve(a.seed)?;
    let mut inputs = vec![a.data.as_path()];
    if let Some(c) = &a.config.config {
        inputs.push(c.as_path());
    }
    let inputs = digest_inputs(&inputs)?;
    create_dir(&a.out)?;
    RunManifest::new("train", config.seed, &a.out, &config, inputs)?.write(&a.out)?;
    write_text(&a.out.join(RESOLVED_CONFIG_FILE), &config.to_kv())?;

    let graph = load(&a.data)?;
    let split = split_nodes(graph.labels(), config.train_fraction, config.seed)?;
    let save = |outcome: &crate::training::TrainOutcome| -> Result<(), CliError> {
        checkpoint::save(&outcome.state, &a.out.join(CHECKPOINT_FILE)).map_err(|e| CliError::runtime(e.to_string()))?;
        write_train_log(&a.out.join(TRAIN_LOG_FILE), graph.num_relations(), &outcome.logs)?;
        Ok(())
    };
    match train(&graph, &split, &config) {
        Ok(outcome) => {
            save(&outcome)?;
            if let Some(last) = outcome.logs.last() {
                println!(
                    "epoch {} loss {:.6} train auc {:.4} test auc {:.4} test recall {:.4}",
                    last.epoch, last.loss, last.train_auc, last.test_auc, last.test_recall
                );
            }
            Ok(())
        }
        Err(TrainError::Numeric {
            epoch,
            source,
            last_good,
        }) => {
            save(&last_good)?;
            Err(CliError::runtime(format!(
                "numeric failure at epoch {epoch}: {source}; last good state saved after {} epochs",
                last_good.logs.len()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn write_metrics(path: &Path, rows: &[(&str, MetricReport)]) -> Result<(), CliError> {
    let mut text = String::from("split,auc,recall,threshold,tp,fn,fp,tn\n");
    for (name, r) in rows {
        text.push_str(&format!(
            "{name},{},{},{},{},{},{},{}\n",
            r.auc, r.recall, r.threshold, r.tp, r.fn_, r.fp, r.tn
        ));
    }
    write_text(path, &text)
}

fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let inputs = digest_inputs(&[&a.model, &a.data])?;
    let state = checkpoint::load(&a.model).map_err(|e| CliError::runtime(e.to_string()))?;
    create_dir(&a.out)?;
    RunManifest::new("eval", state.config.seed, &a.out, &state.config, inputs)?.write(&a.out)?;
    let graph = load(&a.data)?;
    let split = split_nodes(graph.labels(), state.config.train_fraction, state.config.seed)?;
    let probs = state.forward_pass(&graph)?.probs;
    let threshold = state.config.threshold;
    let mut rows = Vec::new();
    for (name, legit, fraud) in [
        ("train", &split.train_legit, &split.train_fraud),
        ("test", &split.test_legit, &split.test_fraud),
    ] {
        match MetricReport::for_nodes(&probs, legit, fraud, threshold) {
            Ok(r) => {
                println!("{name}: auc {:.4} recall {:.4}", r.auc, r.recall);
                rows.push((name, r));
            }
            Err(e) => eprintln!("warning: {name} metrics unavailable: {e}"),
        }
    }
    write_metrics(&a.out.join(METRICS_FILE), &rows)
}

fn report_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<(), CliError> {
    write_comparison(path, rows).map_err(|e| CliError::runtime(e.to_string()))?;
    for (key, auc) in mean_auc_by_key(rows) {
        println!("{key:<8} mean test auc {auc:.4}");
    }
    Ok(())
}

fn comparison_inputs<'a>(data: &'a Path, config: &'a RunConfigArgs) -> Vec<&'a Path> {
    let mut inputs = vec![data];
    if let Some(c) = &config.config {
        inputs.push(c.as_path());
    }
    inputs
}

fn cmd_ablate(a: &AblateArgs) -> Result<(), CliError> {
    let base = a.config.resolve(None)?;
    let variants = a
        .variants
        .iter()
        .map(|v| v.parse::<Variant>())
        .collect::<Result<Vec<_>, _>>()?;
    let inputs = digest_inputs(&comparison_inputs(&a.data, &a.config))?;
    create_dir(&a.out)?;
    let config = serde_json::json!({
        "base": base,
        "variants": variants,
        "seeds": a.seeds,
        "jobs": a.jobs,
    });
    RunManifest::new("ablate", base.seed, &a.out, config, inputs)?.write(&a.out)?;
    let graph = load(&a.data)?;
    let rows = ablate(&graph, &base, &variants, &a.seeds, a.jobs)?;
    report_comparison(&a.out.join(ABLATION_FILE), &rows)
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let base = a.config.resolve(None)?;
    let lambdas = a.lambdas.clone().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    if let Some(bad) = lambdas.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
        return Err(CliError::usage(format!("lambda {bad} is outside (0, 1]")));
    }
    let inputs = digest_inputs(&comparison_inputs(&a.data, &a.config))?;
    create_dir(&a.out)?;
    let config = serde_json::json!({
        "base": base,
        "lambdas": lambdas,
        "seeds": a.seeds,
        "jobs": a.jobs,
    });
    RunManifest::new("sweep", base.seed, &a.out, config, inputs)?.write(&a.out)?;
    let graph = load(&a.data)?;
    let rows = lambda_sweep(&graph, &base, &lambdas, &a.seeds, a.jobs)?;
    report_comparison(&a.out.join(LAMBDA_SWEEP_FILE), &rows)
}

fn cmd_gradcheck(a: &GradcheckArgs) -> Result<(), CliError> {
    let variants = a
        .variants
        .iter()
        .map(|v| v.parse::<Variant>())
        .collect::<Result<Vec<_>, _>>()?;
    let (graph, split) = gradcheck_graph(a.seed)?;
    let mut worst: Option<(f64, String)> = None;
    let mut breaches = Vec::new();
    for variant in variants {
        let config = TrainConfig {
            seed: a.seed,
            variant,
            ..TrainConfig::default()
        };
        for check in model_gradcheck(&graph, &split, &config, a.eps)? {
            let label = format!("{variant}:{}", check.name);
            if check.worst_rel_error > a.tol {
                breaches.push(format!(
                    "{label} entry {} analytic {:e} numeric {:e} rel err {:e}",
                    check.worst_index, check.analytic, check.numeric, check.worst_rel_error
                ));
            }
            if worst.as_ref().is_none_or(|(w, _)| check.worst_rel_error > *w) {
                worst = Some((check.worst_rel_error, label));
            }
        }
    }
    if let Some((err, name)) = &worst {
        println!("worst relative error {err:e} ({name})");
    }
    if breaches.is_empty() {
        println!("gradcheck passed at tolerance {:e}", a.tol);
        Ok(())
    } else {
        for b in &breaches {
            eprintln!("gradient mismatch: {b}");
        }
        Err(CliError::runtime(format!("{} tensor(s) exceed tolerance {:e}", breaches.len(), a.tol)))
    }
}
