//! Central-difference check of every parameter tensor of the full model.

use hagnn::training::{gradcheck_graph, model_gradcheck, TrainConfig, DEFAULT_GRADCHECK_EPS, DEFAULT_GRADCHECK_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (graph, split) = gradcheck_graph(0)?;
    let mut checks = model_gradcheck(&graph, &split, &TrainConfig::default(), DEFAULT_GRADCHECK_EPS)?;
    checks.sort_by(|a, b| b.worst_rel_error.total_cmp(&a.worst_rel_error));
    for c in checks.iter().take(8) {
        println!(
            "{:<28} {:>5} entries  rel err {:.2e}  (analytic {:+.4e}, numeric {:+.4e})",
            c.name, c.entries, c.worst_rel_error, c.analytic, c.numeric
        );
    }
    let worst = checks.first().map_or(0.0, |c| c.worst_rel_error);
    println!("{} tensors, worst {worst:.2e}, tolerance {DEFAULT_GRADCHECK_TOL:e}", checks.len());
    Ok(())
}
