//! Undirected simple graphs, edge-list ingestion and clustering coefficients.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("node {node} out of range for graph with {node_count} nodes")]
    InvalidNode { node: usize, node_count: usize },
    #[error("empty graph")]
    EmptyGraph,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable undirected simple graph over dense node ids `0..n`.
///
/// Neighbor lists are strictly ascending, symmetric and free of self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

/// What was dropped while flattening an edge list into a simple graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

impl Graph {
    /// Builds a simple graph on `node_count` nodes. Self-loops are dropped and
    /// repeated pairs (in either orientation) collapse into one edge.
    ///
    /// Panics if an endpoint is `>= node_count`.
    pub fn from_edges<I>(node_count: usize, edges: I) -> (Self, BuildStats)
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut stats = BuildStats::default();
        let mut adjacency = vec![Vec::new(); node_count];
        for (u, v) in edges {
            assert!(u < node_count && v < node_count, "edge ({u}, {v}) out of range");
            if u == v {
                stats.self_loops_dropped += 1;
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut half_edges = 0;
        let mut removed = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            removed += before - list.len();
            half_edges += list.len();
        }
        // every duplicate pair was removed once from each endpoint
        stats.duplicates_dropped = removed / 2;
        let graph = Graph {
            adjacency,
            edge_count: half_edges / 2,
        };
        (graph, stats)
    }

    pub fn empty() -> Self {
        Graph {
            adjacency: Vec::new(),
            edge_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        if u >= self.node_count() || v >= self.node_count() {
            return false;
        }
        let (small, other) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.adjacency[small].binary_search(&other).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            let start = list.partition_point(|&v| v <= u);
            list[start..].iter().map(move |&v| (u, v))
        })
    }

    pub(crate) fn check_node(&self, v: usize) -> Result<(), GraphError> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::InvalidNode {
                node: v,
                node_count: self.node_count(),
            })
        }
    }
}

/// Number of elements shared by two strictly ascending slices.
pub(crate) fn sorted_intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.is_empty() {
        return 0;
    }
    if large.len() > 16 * small.len() {
        return small
            .iter()
            .filter(|x| large.binary_search(x).is_ok())
            .count();
    }
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < small.len() && j < large.len() {
        match small[i].cmp(&large[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// How tokens on a line are separated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeparatorPolicy {
    /// Whitespace and commas both separate tokens.
    #[default]
    Auto,
    Whitespace,
    Char(char),
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub comment_prefixes: Vec<String>,
    pub separator: SeparatorPolicy,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            comment_prefixes: vec!["#".to_string(), "%".to_string()],
            separator: SeparatorPolicy::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines_read: usize,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
    pub nodes: usize,
    pub edges: usize,
}

fn tokens<'a>(line: &'a str, policy: SeparatorPolicy) -> Box<dyn Iterator<Item = &'a str> + 'a> {
    match policy {
        SeparatorPolicy::Auto => Box::new(
            line.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty()),
        ),
        SeparatorPolicy::Whitespace => Box::new(line.split_whitespace()),
        SeparatorPolicy::Char(sep) => Box::new(line.split(sep).map(str::trim).filter(|t| !t.is_empty())),
    }
}

/// Reads an edge list into a simple undirected graph.
///
/// Only the first two columns are used. Node labels are remapped to dense ids
/// in ascending label order, so the result does not depend on line order.
pub fn parse_edge_list<R: BufRead>(
    reader: R,
    options: &ParseOptions,
) -> Result<(Graph, IngestReport), GraphError> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    let mut lines_read = 0;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        lines_read += 1;
        let trimmed = line.trim();
        if trimmed.is_empty()
            || options
                .comment_prefixes
                .iter()
                .any(|p| trimmed.starts_with(p.as_str()))
        {
            continue;
        }
        let mut cols = tokens(trimmed, options.separator);
        let mut endpoint = |which: &str| -> Result<u64, GraphError> {
            let token = cols.next().ok_or_else(|| GraphError::Parse {
                line: index + 1,
                message: format!("missing {which} endpoint"),
            })?;
            token.parse::<u64>().map_err(|_| GraphError::Parse {
                line: index + 1,
                message: format!("invalid node id {token:?}"),
            })
        };
        let u = endpoint("source")?;
        let v = endpoint("target")?;
        raw.push((u, v));
    }

    let mut labels: Vec<u64> = raw.iter().flat_map(|&(u, v)| [u, v]).collect();
    labels.sort_unstable();
    labels.dedup();
    let dense = |label: u64| labels.binary_search(&label).expect("label collected above");
    let (graph, stats) = Graph::from_edges(
        labels.len(),
        raw.iter().map(|&(u, v)| (dense(u), dense(v))),
    );
    let report = IngestReport {
        lines_read,
        self_loops_dropped: stats.self_loops_dropped,
        duplicates_dropped: stats.duplicates_dropped,
        nodes: graph.node_count(),
        edges: graph.edge_count(),
    };
    Ok((graph, report))
}

/// Writes `u v` lines with `u < v` in sorted order.
pub fn write_edge_list<W: Write>(graph: &Graph, mut out: W) -> std::io::Result<()> {
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn to_edge_list_string(graph: &Graph) -> String {
    let mut buf = Vec::new();
    write_edge_list(graph, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("edge list is ASCII")
}

/// Fraction of the neighbor pairs of `v` that are adjacent; 0 when `v` has
/// fewer than two neighbors.
pub fn local_clustering_coefficient(graph: &Graph, v: usize) -> Result<f64, GraphError> {
    graph.check_node(v)?;
    let nbrs = graph.neighbors(v);
    let k = nbrs.len();
    if k < 2 {
        return Ok(0.0);
    }
    let links: usize = nbrs
        .iter()
        .map(|&u| sorted_intersection_count(nbrs, graph.neighbors(u)))
        .sum::<usize>()
        / 2;
    Ok(links as f64 / (k * (k - 1) / 2) as f64)
}

/// Mean of the local clustering coefficient over all nodes.
///
/// Triangles are counted once per node through the degree-ordered
/// enumeration, which keeps hubs from dominating the cost.
pub fn average_clustering_coefficient(graph: &Graph) -> Result<f64, GraphError> {
    if graph.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let mut per_node = vec![0usize; graph.node_count()];
    for t in crate::census::enumerate_triangles(graph) {
        for v in t.nodes() {
            per_node[v] += 1;
        }
    }
    let total: f64 = per_node
        .iter()
        .enumerate()
        .map(|(v, &tri)| {
            let k = graph.degree(v);
            if k < 2 {
                0.0
            } else {
                tri as f64 / (k * (k - 1) / 2) as f64
            }
        })
        .sum();
    Ok(total / graph.node_count() as f64)
}
