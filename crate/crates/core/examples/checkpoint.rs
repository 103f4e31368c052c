//! Save a trained model, reload it and resume training.

use hagnn::graph::{generate_synthetic, split_nodes, SynthConfig};
use hagnn::training::checkpoint;
use hagnn::training::{train, train_state, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, _) = generate_synthetic(&SynthConfig::benchmark(3))?;
    let config = TrainConfig {
        seed: 3,
        epochs: 5,
        ..TrainConfig::default()
    };
    let split = split_nodes(graph.labels(), config.train_fraction, config.seed)?;
    let out = train(&graph, &split, &config)?;

    let path = std::env::temp_dir().join(format!("hagnn-example-{}.hagnn", std::process::id()));
    checkpoint::save(&out.state, &path)?;
    let restored = checkpoint::load(&path)?;
    let same = restored.forward_pass(&graph)? == out.state.forward_pass(&graph)?;
    println!("{} bytes written, identical predictions after reload: {same}", std::fs::metadata(&path)?.len());

    let resumed = train_state(restored, &graph, &split, 3)?;
    for log in &resumed.logs {
        println!("epoch {} loss {:.4} test auc {:.4}", log.epoch, log.loss, log.test_auc);
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
