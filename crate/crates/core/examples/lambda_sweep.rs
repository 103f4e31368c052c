//! Sweep the legit-class loss weight λ.

use hagnn::evaluation::{lambda_sweep, mean_auc_by_key, DEFAULT_LAMBDAS};
use hagnn::graph::{generate_synthetic, SynthConfig};
use hagnn::training::TrainConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, _) = generate_synthetic(&SynthConfig::benchmark(0))?;
    let base = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let rows = lambda_sweep(&graph, &base, &DEFAULT_LAMBDAS, &[0, 1], 2)?;
    for row in &rows {
        println!("seed {} lambda {:<4} auc {:.4} recall {:.4}", row.seed, row.key, row.report.auc, row.report.recall);
    }
    for (lambda, auc) in mean_auc_by_key(&rows) {
        println!("mean lambda {lambda:<4} auc {auc:.4}");
    }
    Ok(())
}
