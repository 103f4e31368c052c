//! Track the relation weights β and the source weights φ during training.

use hagnn::fusion::Source;
use hagnn::graph::{generate_synthetic, split_nodes, SynthConfig};
use hagnn::neighborhood_attention::node_alphas;
use hagnn::tensor::Tape;
use hagnn::training::{train, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, _) = generate_synthetic(&SynthConfig::benchmark(2))?;
    let config = TrainConfig {
        seed: 2,
        epochs: 12,
        ..TrainConfig::default()
    };
    let split = split_nodes(graph.labels(), config.train_fraction, config.seed)?;
    let out = train(&graph, &split, &config)?;
    let names: Vec<&str> = Source::ALL.iter().map(|s| s.name()).collect();
    println!("epoch  beta{:?}  phi{:?}", graph.relation_names(), names);
    for log in &out.logs {
        let beta: Vec<String> = log.beta.iter().map(|b| format!("{b:.3}")).collect();
        let phi: Vec<String> = log.phi.iter().map(|p| format!("{p:.3}")).collect();
        println!("{:>5}  {}  {}", log.epoch, beta.join(" "), phi.join(" "));
    }

    // Per-neighbor coefficients of the first head in the last layer.
    let state = &out.state;
    let hoods = graph.neighborhoods();
    let mut tape = Tape::new();
    let bind = state.params.bind(&mut tape)?;
    let fwd = state.model.forward(&mut tape, &bind, &graph, &hoods)?;
    let layers = fwd.neighborhood.expect("the full model has a long-range branch").alphas;
    let alpha = tape.value(layers[layers.len() - 1][0]);
    let node = (0..graph.num_nodes()).max_by_key(|&i| hoods.of(i).len()).unwrap_or(0);
    println!("node {node} attends to {:?}", hoods.of(node));
    let coeffs: Vec<String> = node_alphas(alpha, &hoods, node).iter().map(|a| format!("{a:.3}")).collect();
    println!("with weights {}", coeffs.join(" "));
    Ok(())
}
