use std::fs;
use std::path::{Path, PathBuf};

use super::{GraphError, Label, MultiRelationGraph, RelationEdgeList};
use crate::tensor::Matrix;

pub const NODES_FILE: &str = "nodes.csv";
const EDGE_PREFIX: &str = "edges_";

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> GraphError + '_ {
    move |source| GraphError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn ingest(path: &Path, line: u64, message: impl Into<String>) -> GraphError {
    GraphError::Ingest {
        path: path.to_path_buf(),
        line: line as usize,
        message: message.into(),
    }
}

/// Reads `id,label,f0..f{d-1}`. Ids must run 0..N-1 in file order; an empty
/// label means unlabeled.
pub fn load_nodes(path: &Path) -> Result<(Matrix, Vec<Option<Label>>), GraphError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let header = reader.headers().map_err(csv_err(path))?.clone();
    if header.len() < 2 || &header[0] != "id" || &header[1] != "label" {
        return Err(ingest(path, 1, "header must start with `id,label`"));
    }
    let dim = header.len() - 2;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dim + 2 {
            return Err(ingest(
                path,
                line,
                format!("ragged row with {} fields, expected {}", record.len(), dim + 2),
            ));
        }
        let id_text = &record[0];
        if id_text.is_empty() {
            return Err(ingest(path, line, "missing id"));
        }
        let id: usize = id_text
            .parse()
            .map_err(|_| ingest(path, line, format!("invalid id `{id_text}`")))?;
        if id != labels.len() {
            return Err(ingest(path, line, "non-contiguous ids"));
        }
        let label = match &record[1] {
            "" => None,
            "0" => Some(Label::Legit),
            "1" => Some(Label::Fraud),
            other => return Err(ingest(path, line, format!("label `{other}` is not 0, 1 or empty"))),
        };
        labels.push(label);
        for (k, field) in record.iter().skip(2).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| ingest(path, line, format!("feature f{k} `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(ingest(path, line, format!("feature f{k} is not finite")));
            }
            data.push(v);
        }
    }
    let features = Matrix::from_vec(labels.len(), dim, data)?;
    Ok((features, labels))
}

/// Result of reading one `src,dst` file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLoad {
    pub list: RelationEdgeList,
    pub self_pairs_dropped: usize,
}

/// Reads `src,dst` pairs; endpoints must be `< num_nodes`.
pub fn load_relation_edges(
    path: &Path,
    relation_id: usize,
    num_nodes: usize,
) -> Result<EdgeLoad, GraphError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err(path))?;
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(ingest(path, line, format!("expected 2 fields, found {}", record.len())));
        }
        let mut ends = [0usize; 2];
        for (k, end) in ends.iter_mut().enumerate() {
            let text = &record[k];
            *end = text
                .parse()
                .map_err(|_| ingest(path, line, format!("invalid node id `{text}`")))?;
            if *end >= num_nodes {
                return Err(ingest(
                    path,
                    line,
                    format!("endpoint {} out of range for {num_nodes} nodes", *end),
                ));
            }
        }
        pairs.push((ends[0], ends[1]));
    }
    let (list, self_pairs_dropped) = RelationEdgeList::from_pairs(relation_id, pairs);
    Ok(EdgeLoad {
        list,
        self_pairs_dropped,
    })
}

fn natural_key(name: &str) -> (String, u64, String) {
    let digits_at = name
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_digit())
        .last()
        .map(|(i, _)| i);
    match digits_at {
        Some(i) => (name[..i].to_string(), name[i..].parse().unwrap_or(u64::MAX), name.to_string()),
        None => (name.to_string(), 0, name.to_string()),
    }
}

/// Relation files `edges_<name>.csv` in a directory, naturally sorted by name.
fn relation_files(dir: &Path) -> Result<Vec<(String, PathBuf)>, GraphError> {
    let entries = fs::read_dir(dir).map_err(|source| GraphError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| GraphError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let file_name = entry.file_name().to_string_lossy().into_owned();
        if let Some(name) = file_name
            .strip_prefix(EDGE_PREFIX)
            .and_then(|rest| rest.strip_suffix(".csv"))
        {
            out.push((name.to_string(), entry.path()));
        }
    }
    out.sort_by_key(|(name, _)| natural_key(name));
    Ok(out)
}

/// Loads `nodes.csv` plus every `edges_<relation>.csv` of a directory.
/// Returns the graph and the self-pair count dropped per relation.
pub fn load_dataset(dir: &Path) -> Result<(MultiRelationGraph, Vec<usize>), GraphError> {
    let (features, labels) = load_nodes(&dir.join(NODES_FILE))?;
    let files = relation_files(dir)?;
    if files.is_empty() {
        return Err(GraphError::Invalid(format!(
            "{} contains no {EDGE_PREFIX}<relation>.csv files",
            dir.display()
        )));
    }
    let mut lists = Vec::with_capacity(files.len());
    let mut names = Vec::with_capacity(files.len());
    let mut dropped = Vec::with_capacity(files.len());
    for (r, (name, path)) in files.into_iter().enumerate() {
        let load = load_relation_edges(&path, r, labels.len())?;
        dropped.push(load.self_pairs_dropped);
        lists.push(load.list);
        names.push(name);
    }
    let graph = MultiRelationGraph::assemble(features, labels, &lists, names)?;
    Ok((graph, dropped))
}

fn write_file(path: &Path, text: &str) -> Result<(), GraphError> {
    fs::write(path, text).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_nodes(path: &Path, features: &Matrix, labels: &[Option<Label>]) -> Result<(), GraphError> {
    let mut text = String::from("id,label");
    for k in 0..features.cols() {
        text.push_str(&format!(",f{k}"));
    }
    text.push('\n');
    for (i, label) in labels.iter().enumerate() {
        text.push_str(&i.to_string());
        text.push(',');
        if let Some(l) = label {
            text.push_str(&l.bit().to_string());
        }
        for v in features.row(i) {
            text.push(',');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    write_file(path, &text)
}

pub fn write_edges(path: &Path, edges: &[(usize, usize)]) -> Result<(), GraphError> {
    let mut text = String::from("src,dst\n");
    for (a, b) in edges {
        text.push_str(&format!("{a},{b}\n"));
    }
    write_file(path, &text)
}

/// Writes `nodes.csv` and one `edges_<relation>.csv` per relation.
pub fn save_dataset(graph: &MultiRelationGraph, dir: &Path) -> Result<(), GraphError> {
    fs::create_dir_all(dir).map_err(|source| GraphError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_nodes(&dir.join(NODES_FILE), graph.features(), graph.labels())?;
    for (r, name) in graph.relation_names().iter().enumerate() {
        write_edges(&dir.join(format!("{EDGE_PREFIX}{name}.csv")), &graph.relation_edges(r))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let path = dir.join(name);
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn loads_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "nodes.csv", "id,label,f0,f1\n0,1,0.5,1\n1,0,2,3\n2,0,-1,0\n");
        let (x, y) = load_nodes(&path).unwrap();
        assert_eq!(x.shape(), (3, 2));
        assert_eq!(x.row(0), &[0.5, 1.0]);
        assert_eq!(y, vec![Some(Label::Fraud), Some(Label::Legit), Some(Label::Legit)]);
    }

    #[test]
    fn unlabeled_rows_are_allowed() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "nodes.csv", "id,label,f0\n0,,1\n1,1,2\n");
        let (_, y) = load_nodes(&path).unwrap();
        assert_eq!(y, vec![None, Some(Label::Fraud)]);
    }

    #[test]
    fn id_gap_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "nodes.csv", "id,label,f0\n0,1,0.5\n2,0,1.5\n");
        let err = load_nodes(&path).unwrap_err();
        assert!(err.to_string().contains("non-contiguous ids at line 3"), "{err}");
    }

    #[test]
    fn ragged_and_missing_id_rows_fail() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = write(dir.path(), "a.csv", "id,label,f0,f1\n0,1,0.5\n");
        assert!(load_nodes(&ragged).unwrap_err().to_string().contains("ragged row"));
        let missing = write(dir.path(), "b.csv", "id,label,f0\n,1,0.5\n");
        assert!(load_nodes(&missing).unwrap_err().to_string().contains("missing id at line 2"));
        let bad = write(dir.path(), "c.csv", "id,label,f0\n0,2,0.5\n");
        assert!(load_nodes(&bad).is_err());
    }

    #[test]
    fn edges_are_canonicalized() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "e.csv", "src,dst\n1,2\n2,1\n3,3\n");
        let load = load_relation_edges(&path, 0, 4).unwrap();
        assert_eq!(load.list.edges(), &[(1, 2)]);
        assert_eq!(load.self_pairs_dropped, 1);

        let empty = write(dir.path(), "empty.csv", "");
        assert!(load_relation_edges(&empty, 0, 4).unwrap().list.is_empty());

        let out = write(dir.path(), "out.csv", "src,dst\n0,9\n");
        assert!(matches!(load_relation_edges(&out, 0, 4), Err(GraphError::Ingest { line: 2, .. })));
    }

    #[test]
    fn natural_relation_order() {
        let mut names = vec!["r10", "r2", "r1", "rur"];
        names.sort_by_key(|n| natural_key(n));
        assert_eq!(names, vec!["r1", "r2", "r10", "rur"]);
    }
}
