//! Compare the single-source variants with the fused model over a few seeds.

use hagnn::evaluation::{ablate, mean_auc_by_key};
use hagnn::graph::{generate_synthetic, SynthConfig};
use hagnn::training::{TrainConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let mut rows = Vec::new();
    for seed in 0..3 {
        let (graph, _) = generate_synthetic(&SynthConfig::benchmark(seed))?;
        rows.extend(ablate(&graph, &base, &Variant::ABLATION, &[seed], 1)?);
    }
    for row in &rows {
        println!("seed {} {:<4} auc {:.4} recall {:.4}", row.seed, row.key, row.report.auc, row.report.recall);
    }
    for (key, auc) in mean_auc_by_key(&rows) {
        println!("mean {key:<4} {auc:.4}");
    }
    Ok(())
}
