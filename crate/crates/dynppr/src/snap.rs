//! Loader for SNAP-style plain-text edge lists.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum SnapError {
    #[error("line {line}: malformed edge entry: {content:?}")]
    Malformed { line: usize, content: String },
    #[error("no edges or nodes found")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses a whitespace-separated edge list. Lines starting with `#` are
/// comments. Node ids are remapped to dense `0..n` in first-appearance
/// order; exact duplicate pairs and self-loops are dropped (self-loop
/// endpoints still register their node id).
///
/// Returns the deduplicated edge list and the node count.
pub fn load_snap(path: &Path) -> Result<(Vec<(NodeId, NodeId)>, usize), SnapError> {
    let file = File::open(path)?;
    load_snap_reader(BufReader::new(file))
}

pub fn load_snap_reader<R: BufRead>(r: R) -> Result<(Vec<(NodeId, NodeId)>, usize), SnapError> {
    let mut remap: HashMap<u64, NodeId> = HashMap::new();
    let mut seen: std::collections::HashSet<(NodeId, NodeId)> = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(SnapError::Malformed {
                    line: lineno + 1,
                    content: line.to_string(),
                })
            }
        };
        let parse = |s: &str| {
            s.parse::<u64>().map_err(|_| SnapError::Malformed {
                line: lineno + 1,
                content: line.to_string(),
            })
        };
        let (a, b) = (parse(a)?, parse(b)?);
        let mut id = |raw: u64| -> NodeId {
            let next = remap.len() as NodeId;
            *remap.entry(raw).or_insert(next)
        };
        let (u, v) = (id(a), id(b));
        if u == v {
            continue;
        }
        if seen.insert((u, v)) {
            edges.push((u, v));
        }
    }
    if remap.is_empty() {
        return Err(SnapError::Empty);
    }
    Ok((edges, remap.len()))
}

/// Collapses each unordered pair to a single edge, keeping first-appearance
/// order. SNAP undirected files sometimes list both orientations; this makes
/// the list safe to feed into an undirected
/// [`DynamicGraph`](crate::graph::DynamicGraph).
pub fn dedup_undirected(edges: &[(NodeId, NodeId)]) -> Vec<(NodeId, NodeId)> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(edges.len());
    for &(u, v) in edges {
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            out.push((u, v));
        }
    }
    out
}
