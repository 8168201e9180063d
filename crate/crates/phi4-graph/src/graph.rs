use serde::Serialize;

use crate::kernel::Kernel;

/// A space point. Singletons may be pinned to the probe time `t` (membership
/// in `J`); points of a triple are always pinned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vertex {
    pub name: String,
    pub pinned: bool,
    /// Index of the owning triple, if any.
    pub triple: Option<usize>,
}

/// Resonance triple `(v*, v1, v2)` as vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub name: String,
    pub star: usize,
    pub legs: [usize; 2],
}

impl Triple {
    pub fn points(&self) -> [usize; 3] {
        [self.star, self.legs[0], self.legs[1]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub kernel: Kernel,
    pub ends: [usize; 2],
    /// Kernel evaluated at equal times.
    pub equal_time: bool,
    pub mark: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeynmanGraph {
    pub name: String,
    pub vertices: Vec<Vertex>,
    pub triples: Vec<Triple>,
    pub edges: Vec<Edge>,
}

impl FeynmanGraph {
    pub fn vertex(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    pub fn singletons(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].triple.is_none())
    }

    /// `n_G`
    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    /// Node of `v` once every triple is collapsed to a single node: triples
    /// come first, then singletons in declaration order.
    pub fn node(&self, v: usize) -> usize {
        match self.vertices[v].triple {
            Some(t) => t,
            None => self.triples.len() + self.vertices[..v].iter().filter(|w| w.triple.is_none()).count(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.triples.len() + self.singletons().count()
    }

    /// `b1 = |E| - |V'| - n_G + 1`
    pub fn loop_number(&self) -> i64 {
        self.edges.len() as i64 - self.singletons().count() as i64 - self.triples.len() as i64 + 1
    }

    pub fn probe(&self) -> Option<usize> {
        self.edges.iter().position(|e| e.kernel.probe)
    }

    pub fn edge_label(&self, e: usize) -> String {
        let edge = &self.edges[e];
        format!("{}({},{})", edge.kernel.name, self.vertices[edge.ends[0]].name, self.vertices[edge.ends[1]].name)
    }
}
