use num_rational::Rational64;
use serde::Serialize;

use crate::enumerate::{enumerate_relevant_subgraphs, Subgraph};
use crate::error::GraphError;
use crate::graph::FeynmanGraph;
use crate::kernel::{PROBE_DEGREE, TRIPLE_DEGREE};

/// `constant + gamma * coefficient`, exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub constant: Rational64,
    pub gamma: Rational64,
}

impl Linear {
    pub fn at(&self, gamma: Rational64) -> Rational64 {
        self.constant + self.gamma * gamma
    }
}

impl std::fmt::Display for Linear {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let g = self.gamma;
        if g == Rational64::from(0) {
            return write!(f, "{}", self.constant);
        }
        let sign = if g < Rational64::from(0) { '-' } else { '+' };
        let mag = if g < Rational64::from(0) { -g } else { g };
        if mag == Rational64::from(1) {
            write!(f, "{}{sign}gamma", self.constant)
        } else {
            write!(f, "{}{sign}{mag}gamma", self.constant)
        }
    }
}

/// Extension case of a subgraph on its collapsed diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Verdict {
    /// `a > -codim`: unique extension.
    Convergent,
    /// `-codim - 1 <= a <= -codim`: extension after subtracting a local counterterm.
    Renormalizable,
    /// A triple leg is integrated against a smooth remainder; exempt for every `gamma`.
    ShieldedExempt,
    /// `a < -codim - 1`.
    Superdivergent,
}

fn classify(a: Rational64, codim: i64) -> Verdict {
    let c = Rational64::from(codim);
    if a > -c {
        Verdict::Convergent
    } else if a >= -c - 1 {
        // a degree equal to -codim is also a degree slightly below it
        Verdict::Renormalizable
    } else {
        Verdict::Superdivergent
    }
}

#[derive(Debug, Clone)]
pub struct SubgraphVerdict {
    pub subgraph: Subgraph,
    pub b1: i64,
    /// `-6 n_G' - sum a_e` over propagators (the probe counts 0).
    pub a1: i64,
    /// `a1 - 6 - 2 gamma` when the subgraph holds the marked probe.
    pub a2: Option<Linear>,
    /// Free time variables.
    pub free_times: i64,
    /// Space points.
    pub points: i64,
    /// `2 q' + 3 (n' - 1)`
    pub codim_unmarked: i64,
    /// `2 q' + 3 n'`
    pub codim_marked: i64,
    pub shielded: bool,
    /// Case of the `gamma`-free (unmarked) condition, or the exemption.
    pub verdict: Verdict,
    /// The marked condition `a2 > -codim_marked` holds iff `gamma` is below this.
    pub gamma_bound: Option<Rational64>,
}

impl SubgraphVerdict {
    /// Combined case at a given `gamma`.
    pub fn at(&self, gamma: Rational64) -> Verdict {
        if self.shielded {
            return Verdict::ShieldedExempt;
        }
        let marked = self.a2.map_or(Verdict::Convergent, |a2| classify(a2.at(gamma), self.codim_marked));
        self.verdict.max(marked)
    }
}

fn shielded(g: &FeynmanGraph, s: &Subgraph) -> bool {
    g.triples.iter().any(|t| {
        s.vertices.contains(&t.star)
            && t.legs.iter().any(|&leg| !s.edges.iter().any(|&e| g.edges[e].ends.contains(&leg)))
    })
}

/// Power counting of one subgraph with `gamma` kept symbolic.
pub fn verdict(g: &FeynmanGraph, s: &Subgraph) -> SubgraphVerdict {
    let triples = s.vertices.iter().filter(|&&v| g.triples.iter().any(|t| t.star == v)).count() as i64;
    let props: i64 = s.edges.iter().map(|&e| &g.edges[e]).filter(|e| !e.kernel.probe).map(|e| e.kernel.a).sum();
    let a1 = -TRIPLE_DEGREE * triples - props;
    let marked = s.edges.iter().any(|&e| g.edges[e].kernel.probe && g.edges[e].mark);
    let points = s.vertices.len() as i64;
    let free_times = s.vertices.iter().filter(|&&v| !g.vertices[v].pinned).count() as i64;
    let codim_unmarked = 2 * free_times + 3 * (points - 1);
    let codim_marked = 2 * free_times + 3 * points;
    let a2 = marked.then(|| Linear { constant: Rational64::from(a1 - PROBE_DEGREE), gamma: Rational64::from(-2) });
    let is_shielded = shielded(g, s);
    let verdict = if is_shielded { Verdict::ShieldedExempt } else { classify(Rational64::from(a1), codim_unmarked) };
    // a1 - 6 - 2 gamma > -codim  <=>  gamma < (a1 - 6 + codim) / 2
    let gamma_bound = (marked && !is_shielded).then(|| Rational64::new(a1 - PROBE_DEGREE + codim_marked, 2));
    SubgraphVerdict {
        b1: s.loop_number(g),
        subgraph: s.clone(),
        a1,
        a2,
        free_times,
        points,
        codim_unmarked,
        codim_marked,
        shielded: is_shielded,
        verdict,
        gamma_bound,
    }
}

/// Admissible exponents `(-inf, gamma_max)` of one graph.
#[derive(Debug, Clone)]
pub struct GammaRange {
    pub graph: String,
    /// `None` when no condition involves `gamma`.
    pub gamma_max: Option<Rational64>,
    /// Some `gamma`-free condition fails beyond repair: no exponent works.
    pub empty: bool,
    pub subgraphs: Vec<SubgraphVerdict>,
}

impl GammaRange {
    pub fn renormalizable(&self) -> impl Iterator<Item = &SubgraphVerdict> {
        self.subgraphs.iter().filter(|v| v.verdict == Verdict::Renormalizable)
    }

    pub fn shielded(&self) -> impl Iterator<Item = &SubgraphVerdict> {
        self.subgraphs.iter().filter(|v| v.shielded)
    }

    /// Subgraphs whose marked condition sets `gamma_max`.
    pub fn binding(&self) -> impl Iterator<Item = &SubgraphVerdict> {
        self.subgraphs.iter().filter(move |v| v.gamma_bound.is_some() && v.gamma_bound == self.gamma_max)
    }

    /// Tightest bound over several graphs (for a tree with several amplitudes).
    pub fn combined(ranges: &[GammaRange]) -> Option<Rational64> {
        ranges.iter().filter_map(|r| r.gamma_max).min()
    }
}

/// Intersects the conditions of every relevant subgraph (shielded ones excluded).
pub fn gamma_range(g: &FeynmanGraph) -> Result<GammaRange, GraphError> {
    let subgraphs: Vec<SubgraphVerdict> = enumerate_relevant_subgraphs(g)?.iter().map(|s| verdict(g, s)).collect();
    let gamma_max = subgraphs.iter().filter_map(|v| v.gamma_bound).min();
    let empty = subgraphs.iter().any(|v| v.verdict == Verdict::Superdivergent);
    Ok(GammaRange { graph: g.name.clone(), gamma_max, empty, subgraphs })
}
