//! Relation construction from event tables by clique expansion: rows that
//! share every key column of a rule form a group, and all member pairs of a
//! group are connected.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::index;

use super::{GraphError, RelationEdgeList};
use crate::seed::rng_for;

/// Groups above this size are subsampled to `cap·(cap−1)/2` pairs.
pub const DEFAULT_GROUP_CAP: usize = 500;

/// Column holding the node id in an event table.
pub const NODE_COLUMN: &str = "node";

const NAMED_RULES: &[(&str, &[&str])] = &[
    ("same_user", &["user"]),
    ("same_product_star", &["product", "star"]),
    ("same_product_month", &["product", "month"]),
    ("same_product", &["product"]),
    ("same_star_week", &["star", "week"]),
    ("same_minute", &["minute"]),
    ("same_symbol", &["symbol"]),
];

/// Group-by key columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupRule {
    pub name: String,
    pub keys: Vec<String>,
}

impl GroupRule {
    /// One of `same_user`, `same_product_star`, `same_product_month`,
    /// `same_product`, `same_star_week`, `same_minute`, `same_symbol`.
    pub fn named(name: &str) -> Result<Self, GraphError> {
        NAMED_RULES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(n, keys)| GroupRule {
                name: (*n).to_string(),
                keys: keys.iter().map(|k| (*k).to_string()).collect(),
            })
            .ok_or_else(|| GraphError::UnknownRule(name.to_string()))
    }

    pub fn custom(name: impl Into<String>, keys: &[&str]) -> Self {
        GroupRule {
            name: name.into(),
            keys: keys.iter().map(|k| (*k).to_string()).collect(),
        }
    }
}

/// String-valued event table with a `node` column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTable {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl EventTable {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self, GraphError> {
        if let Some((k, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != columns.len()) {
            return Err(GraphError::Invalid(format!(
                "event row {k} has {} fields for {} columns",
                row.len(),
                columns.len()
            )));
        }
        Ok(Self { columns, rows })
    }

    pub fn from_csv(path: &Path) -> Result<Self, GraphError> {
        let csv_err = |source| GraphError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let columns = reader
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(csv_err)?;
        Self::new(columns, rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, name: &str) -> Result<usize, GraphError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| GraphError::MissingColumn(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsampledGroup {
    pub key: Vec<String>,
    pub size: usize,
    pub pairs_kept: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueReport {
    pub groups: usize,
    pub subsampled: Vec<SubsampledGroup>,
}

/// Unrank pair `k` of the `k(k−1)/2` pairs `(a, b)`, `a < b`, of a group of size `n`.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut a = 0;
    loop {
        let row = n - 1 - a;
        if k < row {
            return (a, a + 1 + k);
        }
        k -= row;
        a += 1;
    }
}

/// Union of within-group cliques for `rule`.
pub fn build_relations_from_events(
    table: &EventTable,
    rule: &GroupRule,
    relation_id: usize,
    cap: usize,
    seed: u64,
) -> Result<(RelationEdgeList, CliqueReport), GraphError> {
    let node_col = table.column(NODE_COLUMN)?;
    let key_cols = rule
        .keys
        .iter()
        .map(|k| table.column(k))
        .collect::<Result<Vec<_>, _>>()?;
    let mut groups: BTreeMap<Vec<String>, BTreeSet<usize>> = BTreeMap::new();
    for (k, row) in table.rows.iter().enumerate() {
        let node: usize = row[node_col].parse().map_err(|_| {
            GraphError::Invalid(format!("event row {k}: node `{}` is not an id", row[node_col]))
        })?;
        let key: Vec<String> = key_cols.iter().map(|&c| row[c].clone()).collect();
        if key.iter().any(String::is_empty) {
            continue;
        }
        groups.entry(key).or_default().insert(node);
    }
    let mut pairs = Vec::new();
    let mut subsampled = Vec::new();
    for (key, members) in &groups {
        let members: Vec<usize> = members.iter().copied().collect();
        let size = members.len();
        if size <= cap {
            for a in 0..size {
                for b in a + 1..size {
                    pairs.push((members[a], members[b]));
                }
            }
            continue;
        }
        let total = size * (size - 1) / 2;
        let keep = cap * cap.saturating_sub(1) / 2;
        let mut rng = rng_for(seed, &format!("clique:{}:{}", rule.name, key.join("\u{1f}")));
        let mut picks = index::sample(&mut rng, total, keep).into_vec();
        picks.sort_unstable();
        for k in picks {
            let (a, b) = unrank_pair(k, size);
            pairs.push((members[a], members[b]));
        }
        subsampled.push(SubsampledGroup {
            key: key.clone(),
            size,
            pairs_kept: keep,
        });
    }
    let (list, _) = RelationEdgeList::from_pairs(relation_id, pairs);
    Ok((
        list,
        CliqueReport {
            groups: groups.len(),
            subsampled,
        },
    ))
}
