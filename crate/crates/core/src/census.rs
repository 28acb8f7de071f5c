//! Triangle enumeration and adjacency-factor census for S* (edge-centred)
//! and T* (triangle-centred) complexes.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{sorted_intersection_count, Graph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CensusError {
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),
    #[error("({0}, {1}, {2}) is not a triangle")]
    NotATriangle(usize, usize, usize),
    #[error("census is empty")]
    EmptyCensus,
}

/// A triangle with its nodes in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triangle([usize; 3]);

impl Triangle {
    /// Sorts the three nodes; returns `None` if any two coincide.
    pub fn new(a: usize, b: usize, c: usize) -> Option<Self> {
        let mut nodes = [a, b, c];
        nodes.sort_unstable();
        (nodes[0] < nodes[1] && nodes[1] < nodes[2]).then_some(Triangle(nodes))
    }

    pub fn nodes(&self) -> [usize; 3] {
        self.0
    }

    /// The three edges paired with the vertex opposite each one.
    fn edges_with_opposite(&self) -> [(usize, usize, usize); 3] {
        let [a, b, c] = self.0;
        [(a, b, c), (a, c, b), (b, c, a)]
    }

    pub fn is_in(&self, graph: &Graph) -> bool {
        let [a, b, c] = self.0;
        graph.has_edge(a, b) && graph.has_edge(a, c) && graph.has_edge(b, c)
    }
}

/// Which complex the census is centred on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexKind {
    /// Central edge, flanked by the triangles on it.
    S,
    /// Central triangle, flanked by non-quad triangles on its edges.
    T,
}

impl fmt::Display for ComplexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComplexKind::S => f.write_str("s"),
            ComplexKind::T => f.write_str("t"),
        }
    }
}

impl FromStr for ComplexKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "s" => Ok(ComplexKind::S),
            "t" => Ok(ComplexKind::T),
            other => Err(format!("unknown complex kind {other:?} (expected s or t)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Edge(usize, usize),
    Triangle(Triangle),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CensusEntry {
    pub unit: Unit,
    pub factor: usize,
}

/// Adjacency factor of every edge (S) or every triangle (T), sorted by unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyCensus {
    pub kind: ComplexKind,
    pub entries: Vec<CensusEntry>,
}

impl AdjacencyCensus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn factors(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.factor)
    }

    /// Per-unit dump: `u,v,factor` for S, `a,b,c,factor` for T.
    pub fn write_units<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        match self.kind {
            ComplexKind::S => writeln!(out, "u,v,factor")?,
            ComplexKind::T => writeln!(out, "a,b,c,factor")?,
        }
        for entry in &self.entries {
            match entry.unit {
                Unit::Edge(u, v) => writeln!(out, "{u},{v},{}", entry.factor)?,
                Unit::Triangle(t) => {
                    let [a, b, c] = t.nodes();
                    writeln!(out, "{a},{b},{c},{}", entry.factor)?
                }
            }
        }
        out.flush()
    }
}

/// Lists every triangle once, in ascending canonical order.
///
/// Edges are oriented from lower to higher (degree, id) rank and each
/// oriented pair's out-lists are intersected, which bounds the work by
/// O(m^1.5).
pub fn enumerate_triangles(graph: &Graph) -> Vec<Triangle> {
    let n = graph.node_count();
    let rank_key = |v: usize| (graph.degree(v), v);
    let forward: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            let mut out: Vec<usize> = graph
                .neighbors(u)
                .iter()
                .copied()
                .filter(|&v| rank_key(v) > rank_key(u))
                .collect();
            out.sort_unstable();
            out
        })
        .collect();

    let mut triangles: Vec<Triangle> = (0..n)
        .into_par_iter()
        .flat_map_iter(|u| {
            let out_u = &forward[u];
            let mut found = Vec::new();
            for &v in out_u {
                let out_v = &forward[v];
                let (mut i, mut j) = (0, 0);
                while i < out_u.len() && j < out_v.len() {
                    match out_u[i].cmp(&out_v[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            found.push(Triangle::new(u, v, out_u[i]).expect("distinct nodes"));
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
            found
        })
        .collect();
    triangles.par_sort_unstable();
    triangles
}

/// Number of triangles on edge `(u, v)`, i.e. its common-neighbor count.
pub fn s_adjacency_factor(graph: &Graph, u: usize, v: usize) -> Result<usize, CensusError> {
    if !graph.has_edge(u, v) {
        return Err(CensusError::NotAnEdge(u, v));
    }
    Ok(sorted_intersection_count(graph.neighbors(u), graph.neighbors(v)))
}

/// Number of outside nodes adjacent to exactly two vertices of `t`.
///
/// Each such node closes one flanking triangle on an edge of `t`; a node
/// adjacent to all three vertices would form a quad and is excluded.
pub fn t_adjacency_factor(graph: &Graph, t: &Triangle) -> Result<usize, CensusError> {
    if !t.is_in(graph) {
        let [a, b, c] = t.nodes();
        return Err(CensusError::NotATriangle(a, b, c));
    }
    Ok(t_factor_unchecked(graph, t))
}

fn t_factor_unchecked(graph: &Graph, t: &Triangle) -> usize {
    t.edges_with_opposite()
        .into_iter()
        .map(|(x, y, opposite)| {
            let (small, large) = if graph.degree(x) <= graph.degree(y) {
                (graph.neighbors(x), graph.neighbors(y))
            } else {
                (graph.neighbors(y), graph.neighbors(x))
            };
            let far = graph.neighbors(opposite);
            small
                .iter()
                .filter(|&&w| {
                    w != opposite
                        && large.binary_search(&w).is_ok()
                        && far.binary_search(&w).is_err()
                })
                .count()
        })
        .sum()
}

/// Adjacency factor of every unit of the given kind. Output order is by unit
/// and does not depend on the rayon pool size.
pub fn census(graph: &Graph, kind: ComplexKind) -> AdjacencyCensus {
    let entries = match kind {
        ComplexKind::S => {
            let edges: Vec<(usize, usize)> = graph.edges().collect();
            edges
                .par_iter()
                .map(|&(u, v)| CensusEntry {
                    unit: Unit::Edge(u, v),
                    factor: sorted_intersection_count(graph.neighbors(u), graph.neighbors(v)),
                })
                .collect()
        }
        ComplexKind::T => enumerate_triangles(graph)
            .par_iter()
            .map(|t| CensusEntry {
                unit: Unit::Triangle(*t),
                factor: t_factor_unchecked(graph, t),
            })
            .collect(),
    };
    AdjacencyCensus { kind, entries }
}

/// Histogram of adjacency factors, normalised over all units (zero factors
/// included).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSeries {
    pub support: Vec<usize>,
    pub counts: Vec<usize>,
    pub freq: Vec<f64>,
}

impl DistributionSeries {
    pub fn from_factors<I: IntoIterator<Item = usize>>(factors: I) -> Result<Self, CensusError> {
        let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
        for f in factors {
            *bins.entry(f).or_default() += 1;
        }
        let total: usize = bins.values().sum();
        if total == 0 {
            return Err(CensusError::EmptyCensus);
        }
        let (support, counts): (Vec<usize>, Vec<usize>) = bins.into_iter().unzip();
        let freq = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(DistributionSeries {
            support,
            counts,
            freq,
        })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// CSV with header `factor,count,freq`, ascending by factor.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "factor,count,freq")?;
        for ((x, c), f) in self.support.iter().zip(&self.counts).zip(&self.freq) {
            writeln!(out, "{x},{c},{f:?}")?;
        }
        out.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Parses the output of [`write_csv`](Self::write_csv).
    pub fn parse_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("factor,count,freq") => {}
            other => return Err(format!("unexpected header {other:?}")),
        }
        let mut series = DistributionSeries {
            support: Vec::new(),
            counts: Vec::new(),
            freq: Vec::new(),
        };
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || format!("row {}: malformed {line:?}", i + 2);
            if cols.len() != 3 {
                return Err(bad());
            }
            series.support.push(cols[0].parse().map_err(|_| bad())?);
            series.counts.push(cols[1].parse().map_err(|_| bad())?);
            series.freq.push(cols[2].parse().map_err(|_| bad())?);
        }
        if series.support.windows(2).any(|w| w[0] >= w[1]) {
            return Err("factors must be strictly ascending".into());
        }
        Ok(series)
    }
}

pub fn to_distribution(census: &AdjacencyCensus) -> Result<DistributionSeries, CensusError> {
    DistributionSeries::from_factors(census.factors())
}
