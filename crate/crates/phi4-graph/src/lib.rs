//! Feynman-graph power counting for resonant-product amplitudes.
//!
//! A graph has singleton space-time vertices, resonance triples `(v*, v1, v2)`
//! carrying the kernel of the resonant product, and propagator edges with a
//! fixed weak homogeneity. Subgraphs are checked against the weighted
//! codimension of their collapsed diagonal, with the probe kernel's exponent
//! kept symbolic in `gamma`.

mod enumerate;
mod error;
mod graph;
mod kernel;
mod parse;
mod report;
mod verdict;

pub use enumerate::{enumerate_relevant_subgraphs, Subgraph, MAX_EDGES, MAX_VERTICES};
pub use error::{GraphError, ParseError, ParseErrorKind};
pub use graph::{Edge, FeynmanGraph, Triple, Vertex};
pub use kernel::{Kernel, KernelTable};
pub use parse::{parse_graph, parse_graph_with, parse_graphs};
pub use report::{format_gamma, render_table, GammaRangeJson, SubgraphJson};
pub use verdict::{gamma_range, verdict, GammaRange, Linear, SubgraphVerdict, Verdict};

pub use num_rational::Rational64;
