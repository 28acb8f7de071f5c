//! Adjacency-factor census of S*- and T*-simplicial complexes in undirected
//! networks, PA-TF network growth, distribution fitting and the experiment
//! pipeline that compares real networks against grown replicas.

pub mod census;
pub mod fitkit;
pub mod graph;
pub mod growth;
pub mod pipeline;
pub mod stats;

pub use census::{census, enumerate_triangles, AdjacencyCensus, ComplexKind, DistributionSeries, Triangle};
pub use graph::{parse_edge_list, Graph, IngestReport, ParseOptions};
