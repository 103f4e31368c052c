//! Load a dataset written as `nodes.csv` plus one `edges_<name>.csv` per
//! relation, and inspect a node's neighborhood.

use std::fs;

use hagnn::graph::load_dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile_dir()?;
    fs::write(dir.join("nodes.csv"), "id,label,f0,f1\n0,1,0.9,0.1\n1,1,0.8,0.3\n2,0,0.1,0.7\n3,0,0.2,0.9\n4,,0.5,0.5\n")?;
    fs::write(dir.join("edges_user.csv"), "src,dst\n0,1\n1,0\n2,3\n")?;
    fs::write(dir.join("edges_product.csv"), "src,dst\n1,2\n3,3\n2,4\n")?;

    let (graph, dropped) = load_dataset(&dir)?;
    println!("relations {:?}, self pairs dropped {:?}", graph.relation_names(), dropped);
    for r in 0..graph.num_relations() {
        println!("{}: {:?}", graph.relation_names()[r], graph.relation_edges(r));
    }
    println!("union neighborhood of node 2: {:?}", graph.neighbor_union(2)?);
    println!("labels: {:?}", graph.labels());
    fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let dir = std::env::temp_dir().join(format!("hagnn-csv-ingest-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}
