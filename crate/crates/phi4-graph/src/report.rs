use std::fmt::Write;

use num_rational::Rational64;
use serde::Serialize;

use crate::graph::FeynmanGraph;
use crate::verdict::{GammaRange, SubgraphVerdict, Verdict};

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Convergent => "convergent",
        Verdict::Renormalizable => "renormalizable",
        Verdict::ShieldedExempt => "shielded",
        Verdict::Superdivergent => "superdivergent",
    }
}

pub fn format_gamma(g: Option<Rational64>) -> String {
    g.map_or("inf".into(), |g| g.to_string())
}

fn labels(g: &FeynmanGraph, v: &SubgraphVerdict) -> Vec<String> {
    v.subgraph.edges.iter().map(|&e| g.edge_label(e)).collect()
}

/// Per-subgraph table followed by `gamma_max = ...`.
pub fn render_table(g: &FeynmanGraph, range: &GammaRange) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "graph {}  (b1 = {}, n_G = {})", g.name, g.loop_number(), g.triple_count());
    let _ = writeln!(
        out,
        "{:>3}  {:<56} {:>3} {:>5} {:>12} {:>7} {:>7}  {:<15} {:>6}",
        "#", "edges", "b1", "a1", "a2", "codim_u", "codim_m", "verdict", "bound"
    );
    for (i, v) in range.subgraphs.iter().enumerate() {
        let a2 = v.a2.map_or("-".into(), |a| a.to_string());
        let bound = v.gamma_bound.map_or("-".into(), |b| format!("<{b}"));
        let _ = writeln!(
            out,
            "{:>3}  {:<56} {:>3} {:>5} {:>12} {:>7} {:>7}  {:<15} {:>6}",
            i,
            labels(g, v).join(" "),
            v.b1,
            v.a1,
            a2,
            v.codim_unmarked,
            v.codim_marked,
            verdict_name(v.verdict),
            bound
        );
    }
    if range.empty {
        let _ = writeln!(out, "no admissible gamma: superdivergent subgraph");
    }
    let _ = write!(out, "gamma_max = {}", format_gamma(range.gamma_max));
    out
}

#[derive(Debug, Serialize)]
pub struct SubgraphJson {
    pub edges: Vec<String>,
    pub vertices: Vec<String>,
    pub b1: i64,
    pub a1: i64,
    pub a2: Option<String>,
    pub free_times: i64,
    pub points: i64,
    pub codim_unmarked: i64,
    pub codim_marked: i64,
    pub shielded: bool,
    pub verdict: Verdict,
    pub gamma_bound: Option<String>,
}

/// Serializable view of a [`GammaRange`] with exact rationals as strings.
#[derive(Debug, Serialize)]
pub struct GammaRangeJson {
    pub graph: String,
    pub loop_number: i64,
    pub triples: usize,
    pub edges: usize,
    pub gamma_max: Option<String>,
    pub empty: bool,
    pub subgraphs: Vec<SubgraphJson>,
}

impl GammaRangeJson {
    pub fn new(g: &FeynmanGraph, range: &GammaRange) -> Self {
        Self {
            graph: g.name.clone(),
            loop_number: g.loop_number(),
            triples: g.triple_count(),
            edges: g.edges.len(),
            gamma_max: range.gamma_max.map(|r| r.to_string()),
            empty: range.empty,
            subgraphs: range
                .subgraphs
                .iter()
                .map(|v| SubgraphJson {
                    edges: labels(g, v),
                    vertices: v.subgraph.vertices.iter().map(|&i| g.vertices[i].name.clone()).collect(),
                    b1: v.b1,
                    a1: v.a1,
                    a2: v.a2.map(|a| a.to_string()),
                    free_times: v.free_times,
                    points: v.points,
                    codim_unmarked: v.codim_unmarked,
                    codim_marked: v.codim_marked,
                    shielded: v.shielded,
                    verdict: v.verdict,
                    gamma_bound: v.gamma_bound.map(|b| b.to_string()),
                })
                .collect(),
        }
    }
}
