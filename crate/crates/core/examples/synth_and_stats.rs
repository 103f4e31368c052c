//! Generate the benchmark graph and print its camouflage statistics.

use hagnn::evaluation::{camouflage_report, FeatureSimilarity};
use hagnn::graph::{generate_synthetic, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, config) = generate_synthetic(&SynthConfig::benchmark(0))?;
    println!(
        "{} nodes, {} relations, camouflage {} / {}",
        graph.num_nodes(),
        graph.num_relations(),
        config.camouflage_rate,
        config.feature_camouflage_rate
    );
    println!("{:<6} {:>7} {:>10} {:>10}", "rel", "edges", "label_sim", "feat_sim");
    for row in camouflage_report(&graph, FeatureSimilarity::Normalized)? {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<6} {:>7} {:>10} {:>10}",
            row.relation,
            row.edges,
            fmt(row.label_similarity),
            fmt(row.feature_similarity)
        );
    }
    Ok(())
}
