//! Edge streams: a seeded permutation of an edge list split into an initial
//! graph and a replayable sequence of events.
//!
//! Events follow toggle semantics: an arriving pair is inserted when absent
//! and deleted when present. Streams generated by [`generate_stream`] consist
//! purely of insertions (the tail of the permutation is disjoint from the
//! initial graph), but replay and the on-disk format handle deletions too.

use std::io::{self, BufRead, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeOp {
    Insert,
    Delete,
}

/// One edge update; `index` is the 1-based position in the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeEvent {
    pub index: u32,
    pub op: EdgeOp,
    pub u: NodeId,
    pub v: NodeId,
}

/// A split edge permutation: `initial_edges` form the starting graph, the
/// remaining edges arrive one by one as events.
#[derive(Debug, Clone)]
pub struct EdgeStream {
    pub initial_edges: Vec<(NodeId, NodeId)>,
    pub events: Vec<EdgeEvent>,
    pub seed: u64,
    pub split_fraction: f64,
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("edge list is empty")]
    EmptyEdgeList,
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    InvalidSplit(f64),
    #[error("line {line}: malformed stream entry: {content:?}")]
    Malformed { line: usize, content: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Permutes `edges` with a seeded Fisher–Yates shuffle and splits the result:
/// the first `⌊split_fraction · |edges|⌋` edges become the initial graph, the
/// rest become insertion events in permutation order.
///
/// Deterministic for a fixed seed.
pub fn generate_stream(
    edges: &[(NodeId, NodeId)],
    seed: u64,
    split_fraction: f64,
) -> Result<EdgeStream, StreamError> {
    if edges.is_empty() {
        return Err(StreamError::EmptyEdgeList);
    }
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(StreamError::InvalidSplit(split_fraction));
    }
    let mut perm = edges.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..perm.len()).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    let cut = (split_fraction * perm.len() as f64).floor() as usize;
    let events = perm[cut..]
        .iter()
        .enumerate()
        .map(|(i, &(u, v))| EdgeEvent {
            index: i as u32 + 1,
            op: EdgeOp::Insert,
            u,
            v,
        })
        .collect();
    perm.truncate(cut);
    Ok(EdgeStream {
        initial_edges: perm,
        events,
        seed,
        split_fraction,
    })
}

impl EdgeStream {
    /// Writes the stream as plain text: `# seed`/`# split` headers, one
    /// `0 init u v` line per initial edge, then `i insert|delete u v` lines.
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "# seed {}", self.seed)?;
        writeln!(w, "# split {}", self.split_fraction)?;
        for &(u, v) in &self.initial_edges {
            writeln!(w, "0 init {} {}", u, v)?;
        }
        for ev in &self.events {
            let op = match ev.op {
                EdgeOp::Insert => "insert",
                EdgeOp::Delete => "delete",
            };
            writeln!(w, "{} {} {} {}", ev.index, op, ev.u, ev.v)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self, StreamError> {
        let mut stream = EdgeStream {
            initial_edges: Vec::new(),
            events: Vec::new(),
            seed: 0,
            split_fraction: 0.0,
        };
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let malformed = || StreamError::Malformed {
                line: lineno + 1,
                content: line.to_string(),
            };
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                match (it.next(), it.next()) {
                    (Some("seed"), Some(v)) => stream.seed = v.parse().map_err(|_| malformed())?,
                    (Some("split"), Some(v)) => {
                        stream.split_fraction = v.parse().map_err(|_| malformed())?
                    }
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(malformed());
            }
            let index: u32 = fields[0].parse().map_err(|_| malformed())?;
            let u: NodeId = fields[2].parse().map_err(|_| malformed())?;
            let v: NodeId = fields[3].parse().map_err(|_| malformed())?;
            match fields[1] {
                "init" => stream.initial_edges.push((u, v)),
                "insert" => stream.events.push(EdgeEvent {
                    index,
                    op: EdgeOp::Insert,
                    u,
                    v,
                }),
                "delete" => stream.events.push(EdgeEvent {
                    index,
                    op: EdgeOp::Delete,
                    u,
                    v,
                }),
                _ => return Err(malformed()),
            }
        }
        Ok(stream)
    }
}
