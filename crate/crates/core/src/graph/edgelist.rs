//! Edge-list text format.
//!
//! ```text
//! # comment
//! undirected 4
//! 0 1
//! 1 2
//! ```
//!
//! The first non-comment line is `<directed|undirected> <n>`, followed by one
//! `u v` pair per line. Anything after a `#` is ignored.

use std::collections::HashSet;
use std::io::BufRead;

use super::{Graph, GraphError, NodeId};

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Repair nodes without out-neighbors by adding a self-loop instead of
    /// rejecting the graph.
    pub patch_dangling: bool,
}

pub fn load_edge_list(reader: impl BufRead, options: LoadOptions) -> Result<Graph, GraphError> {
    let mut text = String::new();
    for line in reader.lines() {
        let line = line.map_err(|e| GraphError::Io(e.to_string()))?;
        text.push_str(&line);
        text.push('\n');
    }
    parse_edge_list(&text, options)
}

pub fn parse_edge_list(text: &str, options: LoadOptions) -> Result<Graph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, line)| !line.is_empty());

    let (header_line, header) = lines.next().ok_or(GraphError::Empty)?;
    let mut fields = header.split_whitespace();
    let directed = match fields.next() {
        Some("directed") => true,
        Some("undirected") => false,
        other => {
            return Err(GraphError::Malformed {
                line: header_line,
                reason: format!("expected `directed` or `undirected`, found {other:?}"),
            })
        }
    };
    let n: usize = parse_field(fields.next(), header_line, "node count")?;
    if fields.next().is_some() {
        return Err(malformed(header_line, "trailing fields in header"));
    }
    if n == 0 {
        return Err(GraphError::Empty);
    }

    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (line, body) in lines {
        let mut fields = body.split_whitespace();
        let u: NodeId = parse_field(fields.next(), line, "source id")?;
        let v: NodeId = parse_field(fields.next(), line, "target id")?;
        if fields.next().is_some() {
            return Err(malformed(line, "expected exactly two node ids"));
        }
        for id in [u, v] {
            if id >= n {
                return Err(GraphError::IdOutOfRange { line, id, n });
            }
        }
        let key = if directed {
            (u, v)
        } else {
            (u.min(v), u.max(v))
        };
        if !seen.insert(key) {
            return Err(GraphError::DuplicateEdge { line, u, v });
        }
        edges.push((u, v));
    }

    let mut graph = Graph::from_edges_unvalidated(n, directed, edges)?;
    if options.patch_dangling {
        let patched = graph.patch_dangling_with_self_loops();
        if !patched.is_empty() {
            log::warn!("patched {} dangling node(s) with self-loops", patched.len());
        }
    }
    graph.ensure_valid()?;
    if !graph.is_connected() {
        log::warn!("graph is not connected; PageRank is still well-defined with resets");
    }
    Ok(graph)
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, GraphError> {
    let field = field.ok_or_else(|| malformed(line, &format!("missing {what}")))?;
    field
        .parse()
        .map_err(|_| malformed(line, &format!("invalid {what} `{field}`")))
}

fn malformed(line: usize, reason: &str) -> GraphError {
    GraphError::Malformed {
        line,
        reason: reason.to_string(),
    }
}
