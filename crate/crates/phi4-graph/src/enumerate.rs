use serde::Serialize;

use crate::error::GraphError;
use crate::graph::FeynmanGraph;

pub const MAX_VERTICES: usize = 14;
pub const MAX_EDGES: usize = 20;

/// Edge subset together with the points it spans (triples always complete).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subgraph {
    pub edges: Vec<usize>,
    pub vertices: Vec<usize>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = x;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
}

/// Whether the contracted nodes touched by `edges` form one component, ignoring `skip`.
fn connected(g: &FeynmanGraph, edges: &[usize], nodes: &[usize], skip: Option<usize>) -> bool {
    let mut dsu = Dsu::new(g.node_count());
    for &e in edges {
        if Some(e) != skip {
            let [a, b] = g.edges[e].ends;
            dsu.union(g.node(a), g.node(b));
        }
    }
    let root = dsu.find(nodes[0]);
    nodes.iter().all(|&n| dsu.find(n) == root)
}

impl Subgraph {
    pub(crate) fn from_edges(g: &FeynmanGraph, edges: Vec<usize>) -> Self {
        let mut vertices: Vec<usize> = Vec::new();
        for &e in &edges {
            for &v in &g.edges[e].ends {
                match g.vertices[v].triple {
                    Some(t) => vertices.extend(g.triples[t].points()),
                    None => vertices.push(v),
                }
            }
        }
        vertices.sort_unstable();
        vertices.dedup();
        Self { edges, vertices }
    }

    /// Collapsed nodes spanned by the subgraph.
    pub fn nodes(&self, g: &FeynmanGraph) -> Vec<usize> {
        let mut n: Vec<usize> = self.vertices.iter().map(|&v| g.node(v)).collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    /// `b1 = |E'| - |V'_s| - n_G' + 1`, computed on collapsed nodes.
    pub fn loop_number(&self, g: &FeynmanGraph) -> i64 {
        self.edges.len() as i64 - self.nodes(g).len() as i64 + 1
    }

    pub fn is_connected(&self, g: &FeynmanGraph) -> bool {
        !self.edges.is_empty() && connected(g, &self.edges, &self.nodes(g), None)
    }

    /// No single edge removal disconnects the subgraph.
    pub fn is_bridgeless(&self, g: &FeynmanGraph) -> bool {
        let nodes = self.nodes(g);
        self.edges.iter().all(|&e| connected(g, &self.edges, &nodes, Some(e)))
    }

    pub fn is_relevant(&self, g: &FeynmanGraph) -> bool {
        self.is_connected(g) && self.loop_number(g) > 0 && self.is_bridgeless(g)
    }
}

/// All connected, bridgeless subgraphs with at least one loop, by exhaustive
/// search over edge subsets.
pub fn enumerate_relevant_subgraphs(g: &FeynmanGraph) -> Result<Vec<Subgraph>, GraphError> {
    let m = g.edges.len();
    if g.vertices.len() > MAX_VERTICES || m > MAX_EDGES {
        return Err(GraphError::TooLarge {
            vertices: g.vertices.len(),
            edges: m,
            subsets: 1u128 << m.min(127),
            max_vertices: MAX_VERTICES,
            max_edges: MAX_EDGES,
        });
    }
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << m) {
        // a loop needs as many edges as collapsed nodes
        if (mask.count_ones() as usize) < 2 {
            continue;
        }
        let edges: Vec<usize> = (0..m).filter(|&e| mask >> e & 1 == 1).collect();
        let s = Subgraph::from_edges(g, edges);
        if s.is_relevant(g) {
            out.push(s);
        }
    }
    Ok(out)
}
