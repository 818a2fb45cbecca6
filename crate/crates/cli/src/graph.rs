//! Loaders for external data: directed edge lists and outcome tables.

use anyhow::{bail, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;
use subcover_core::generators::TableEntry;

/// Reads a directed edge list: one `u v` pair per line, whitespace
/// separated; `#` starts a comment.
pub fn load_edge_list(path: &Path) -> Result<Vec<(u32, u32)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read edge list {}", path.display()))?;
    let mut edges = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |s: Option<&str>| -> Result<u32> {
            s.ok_or_else(|| anyhow::anyhow!("line {}: expected `u v`", ln + 1))?
                .parse()
                .with_context(|| format!("line {}: bad node id", ln + 1))
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        edges.push((u, v));
    }
    if edges.is_empty() {
        bail!("edge list {} contains no edges", path.display());
    }
    Ok(edges)
}

/// Induced subgraph on the `k` nodes of highest out-degree (ties broken by
/// lowest node id), with node ids remapped to a contiguous range in
/// ascending original-id order.
pub fn top_k_by_out_degree(edges: &[(u32, u32)], k: usize) -> Vec<(u32, u32)> {
    let mut out_degree: BTreeMap<u32, usize> = BTreeMap::new();
    for &(u, v) in edges {
        *out_degree.entry(u).or_insert(0) += 1;
        out_degree.entry(v).or_insert(0);
    }
    let mut nodes: Vec<(u32, usize)> = out_degree.into_iter().collect();
    nodes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    nodes.truncate(k);
    let mut kept: Vec<u32> = nodes.into_iter().map(|(id, _)| id).collect();
    kept.sort_unstable();
    let index: BTreeMap<u32, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i as u32))
        .collect();
    edges
        .iter()
        .filter_map(|&(u, v)| Some((*index.get(&u)?, *index.get(&v)?)))
        .collect()
}

/// Reads an outcome table: one row per scenario, comma- or
/// whitespace-separated cells `0`, `1` or `?` (unknown).
pub fn load_odt_table(path: &Path) -> Result<Vec<Vec<TableEntry>>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read table {}", path.display()))?;
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = if line.contains(',') {
            line.split(',').map(str::trim).collect()
        } else {
            line.split_whitespace().collect()
        };
        let row: Vec<TableEntry> = cells
            .iter()
            .map(|c| match *c {
                "0" => Ok(TableEntry::Zero),
                "1" => Ok(TableEntry::One),
                "?" => Ok(TableEntry::Unknown),
                other => bail!("line {}: bad cell {other:?} (expected 0, 1 or ?)", ln + 1),
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("table {} has no rows", path.display());
    }
    Ok(rows)
}
