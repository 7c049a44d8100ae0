//! Plain-text edge lists: a header `n m`, then `m` lines `u v` with `u < v`.

use std::fmt::Write as _;

use super::Graph;
use crate::error::{Error, Result};

/// Canonical text form; identical graphs always produce identical bytes.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (header_line, header) =
        lines.next().ok_or(Error::Parse { line: 1, reason: "missing header".into() })?;
    let (n, m) = parse_pair(header_line, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, text) in lines {
        let (u, v) = parse_pair(line, text)?;
        if u == v {
            return Err(Error::Parse { line, reason: format!("self-loop at node {u}") });
        }
        if u >= n || v >= n {
            return Err(Error::Parse { line, reason: format!("endpoint outside 0..{n}") });
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: header_line,
            reason: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Graph::from_edges(n, &edges).map_err(|e| Error::Parse { line: 0, reason: e.to_string() })
}

fn parse_pair(line: usize, text: &str) -> Result<(usize, usize)> {
    let mut it = text.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::Parse { line, reason: format!("expected two integers, got {text:?}") }),
    }
}
