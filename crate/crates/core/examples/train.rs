//! Train the full model on the synthetic benchmark and report test metrics.

use hagnn::evaluation::MetricReport;
use hagnn::graph::{generate_synthetic, split_nodes, SynthConfig};
use hagnn::training::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, _) = generate_synthetic(&SynthConfig::benchmark(1))?;
    let config = TrainConfig {
        seed: 1,
        epochs: 20,
        ..TrainConfig::default()
    };
    let split = split_nodes(graph.labels(), config.train_fraction, config.seed)?;
    let out = train(&graph, &split, &config)?;
    for log in out.logs.iter().step_by(5) {
        println!(
            "epoch {:>3} loss {:>9.4} train auc {:.4} test auc {:.4}",
            log.epoch, log.loss, log.train_auc, log.test_auc
        );
    }
    let probs = out.state.forward_pass(&graph)?.probs;
    let report = MetricReport::for_nodes(&probs, &split.test_legit, &split.test_fraud, config.threshold)?;
    println!(
        "test auc {:.4}, recall {:.4} (tp {}, fn {}, fp {}, tn {})",
        report.auc, report.recall, report.tp, report.fn_, report.fp, report.tn
    );
    println!("{} trainable scalars", out.state.num_parameters());
    Ok(())
}
