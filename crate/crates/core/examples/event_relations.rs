//! Build relations from a review table by connecting rows that share keys.

use hagnn::graph::{build_relations_from_events, EventTable, GroupRule, DEFAULT_GROUP_CAP};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = [
        ("0", "alice", "p1", "5"),
        ("1", "alice", "p2", "5"),
        ("2", "bob", "p1", "5"),
        ("3", "carol", "p1", "1"),
        ("4", "bob", "p2", "1"),
    ];
    let table = EventTable::new(
        ["node", "user", "product", "star"].map(String::from).to_vec(),
        rows.iter().map(|(n, u, p, s)| [n, u, p, s].map(|v| v.to_string()).to_vec()).collect(),
    )?;
    for (r, name) in ["same_user", "same_product_star", "same_product"].into_iter().enumerate() {
        let rule = GroupRule::named(name)?;
        let (list, report) = build_relations_from_events(&table, &rule, r, DEFAULT_GROUP_CAP, 0)?;
        println!("{name:<18} {} groups -> edges {:?}", report.groups, list.edges());
    }
    Ok(())
}
