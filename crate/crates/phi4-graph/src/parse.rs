//! Line-oriented graph format:
//!
//! ```text
//! graph G24
//! triple Y = (ys, y1, y2)
//! triple Z = (zs, z1, z2)
//! vertex xa
//! vertex xb
//! edge Q ys zs mark
//! edge G2 y1 z1 time0
//! edge L y2 xa
//! edge L z2 xb
//! edge G2 xa xb
//! ```
//!
//! `vertex a time=t` pins a singleton to the probe time, as does `J = {a, b}`.
//! `kernel NAME A` registers a propagator of degree `A`. `#` starts a comment.

use crate::error::{ParseError, ParseErrorKind};
use crate::graph::{Edge, FeynmanGraph, Triple, Vertex};
use crate::kernel::KernelTable;

struct RawEdge {
    line: usize,
    kind: String,
    ends: [String; 2],
    equal_time: bool,
    mark: bool,
}

struct Builder {
    name: String,
    vertices: Vec<(Vertex, usize)>,
    triples: Vec<Triple>,
    edges: Vec<RawEdge>,
    pins: Vec<(String, usize)>,
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

impl Builder {
    fn new(name: &str) -> Self {
        Self { name: name.into(), vertices: vec![], triples: vec![], edges: vec![], pins: vec![] }
    }

    fn add_vertex(&mut self, name: &str, pinned: bool, triple: Option<usize>, line: usize) -> Result<usize, ParseError> {
        if self.vertices.iter().any(|(v, _)| v.name == name) {
            return Err(err(line, ParseErrorKind::DuplicateVertex(name.into())));
        }
        self.vertices.push((Vertex { name: name.into(), pinned, triple }, line));
        Ok(self.vertices.len() - 1)
    }

    fn lookup(&self, name: &str, line: usize) -> Result<usize, ParseError> {
        self.vertices
            .iter()
            .position(|(v, _)| v.name == name)
            .ok_or_else(|| err(line, ParseErrorKind::DanglingVertex(name.into())))
    }

    fn finish(mut self, kernels: &KernelTable) -> Result<FeynmanGraph, ParseError> {
        for (name, line) in std::mem::take(&mut self.pins) {
            let v = self.lookup(&name, line)?;
            self.vertices[v].0.pinned = true;
        }
        let vertices: Vec<Vertex> = self.vertices.iter().map(|(v, _)| v.clone()).collect();
        let mut edges: Vec<Edge> = Vec::new();
        let mut probe_line: Option<usize> = None;
        for raw in &self.edges {
            let kernel = kernels
                .get(&raw.kind)
                .cloned()
                .ok_or_else(|| err(raw.line, ParseErrorKind::UnknownKernel(raw.kind.clone())))?;
            let a = self.lookup(&raw.ends[0], raw.line)?;
            let b = self.lookup(&raw.ends[1], raw.line)?;
            if a == b {
                return Err(err(raw.line, ParseErrorKind::SelfLoop(raw.ends[0].clone())));
            }
            if let (Some(ta), Some(tb)) = (vertices[a].triple, vertices[b].triple) {
                if ta == tb {
                    return Err(err(raw.line, ParseErrorKind::EdgeWithinTriple(self.triples[ta].name.clone())));
                }
            }
            if raw.mark && !kernel.probe {
                return Err(err(raw.line, ParseErrorKind::MarkOnPropagator));
            }
            if kernel.probe {
                if let Some(first) = probe_line {
                    return Err(err(raw.line, ParseErrorKind::SecondProbe(first)));
                }
                probe_line = Some(raw.line);
                for &v in &[a, b] {
                    let ok = match vertices[v].triple {
                        Some(t) => self.triples[t].star == v,
                        None => vertices[v].pinned,
                    };
                    if !ok {
                        return Err(err(raw.line, ParseErrorKind::ProbeEndpoint(vertices[v].name.clone())));
                    }
                }
            }
            if raw.equal_time {
                for &v in &[a, b] {
                    if !vertices[v].pinned {
                        return Err(err(raw.line, ParseErrorKind::EqualTimeEndpoint(vertices[v].name.clone())));
                    }
                }
            }
            // the probe may run parallel to one propagator; two propagators may not
            let parallel = edges.iter().any(|e| {
                let same = (e.ends == [a, b]) || (e.ends == [b, a]);
                same && !e.kernel.probe && !kernel.probe
            });
            if parallel {
                return Err(err(raw.line, ParseErrorKind::ParallelEdges(raw.ends[0].clone(), raw.ends[1].clone())));
            }
            edges.push(Edge { kernel, ends: [a, b], equal_time: raw.equal_time, mark: raw.mark });
        }
        Ok(FeynmanGraph { name: self.name, vertices, triples: self.triples, edges })
    }
}

fn parse_triple(rest: &str) -> Option<(String, [String; 3])> {
    let (name, body) = rest.split_once('=')?;
    let name = name.trim();
    let body = body.trim().strip_prefix('(')?.strip_suffix(')')?;
    let parts: Vec<&str> = body.split(',').map(str::trim).collect();
    if name.is_empty() || parts.len() != 3 || parts.iter().any(|p| !is_ident(p)) {
        return None;
    }
    Some((name.into(), [parts[0].into(), parts[1].into(), parts[2].into()]))
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'' || c == '*')
}

/// Parses every `graph` section. Text without a header is one graph named `G`.
pub fn parse_graphs(text: &str) -> Result<Vec<FeynmanGraph>, ParseError> {
    parse_graphs_with(text, &mut KernelTable::default())
}

/// First graph of the text.
pub fn parse_graph(text: &str) -> Result<FeynmanGraph, ParseError> {
    parse_graph_with(text, &mut KernelTable::default())
}

pub fn parse_graph_with(text: &str, kernels: &mut KernelTable) -> Result<FeynmanGraph, ParseError> {
    parse_graphs_with(text, kernels)?.into_iter().next().ok_or(err(0, ParseErrorKind::Empty))
}

fn parse_graphs_with(text: &str, kernels: &mut KernelTable) -> Result<Vec<FeynmanGraph>, ParseError> {
    let mut done = Vec::new();
    let mut current: Option<Builder> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let (head, rest) = s.split_once(char::is_whitespace).map_or((s, ""), |(h, r)| (h, r.trim()));
        if head == "graph" {
            if let Some(b) = current.take() {
                done.push(b.finish(kernels)?);
            }
            if !is_ident(rest) {
                return Err(err(line, ParseErrorKind::Syntax));
            }
            current = Some(Builder::new(rest));
            continue;
        }
        if head == "kernel" {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            match parts.as_slice() {
                [name, a] if is_ident(name) => {
                    let a: i64 = a.parse().map_err(|_| err(line, ParseErrorKind::Syntax))?;
                    kernels.register(name, a);
                }
                _ => return Err(err(line, ParseErrorKind::Syntax)),
            }
            continue;
        }
        let b = current.get_or_insert_with(|| Builder::new("G"));
        match head {
            "vertex" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let (name, pinned) = match parts.as_slice() {
                    [name] => (*name, false),
                    [name, "time=t"] => (*name, true),
                    _ => return Err(err(line, ParseErrorKind::Syntax)),
                };
                if !is_ident(name) {
                    return Err(err(line, ParseErrorKind::Syntax));
                }
                b.add_vertex(name, pinned, None, line)?;
            }
            "triple" => {
                let (name, pts) = parse_triple(rest).ok_or(err(line, ParseErrorKind::Syntax))?;
                let t = b.triples.len();
                let ids: Vec<usize> =
                    pts.iter().map(|p| b.add_vertex(p, true, Some(t), line)).collect::<Result<_, _>>()?;
                b.triples.push(Triple { name, star: ids[0], legs: [ids[1], ids[2]] });
            }
            "edge" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() < 3 {
                    return Err(err(line, ParseErrorKind::Syntax));
                }
                let mut equal_time = false;
                let mut mark = false;
                for flag in &parts[3..] {
                    match *flag {
                        "time0" if !equal_time => equal_time = true,
                        "mark" if !mark => mark = true,
                        _ => return Err(err(line, ParseErrorKind::Syntax)),
                    }
                }
                b.edges.push(RawEdge {
                    line,
                    kind: parts[0].into(),
                    ends: [parts[1].into(), parts[2].into()],
                    equal_time,
                    mark,
                });
            }
            _ if s.starts_with('J') && s[1..].trim_start().starts_with('=') => {
                let body = s[1..].trim_start()[1..].trim();
                let body = body
                    .strip_prefix('{')
                    .and_then(|x| x.strip_suffix('}'))
                    .ok_or(err(line, ParseErrorKind::Syntax))?;
                for name in body.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                    if !is_ident(name) {
                        return Err(err(line, ParseErrorKind::Syntax));
                    }
                    b.pins.push((name.into(), line));
                }
            }
            _ => return Err(err(line, ParseErrorKind::Syntax)),
        }
    }
    if let Some(b) = current.take() {
        done.push(b.finish(kernels)?);
    }
    if done.is_empty() {
        return Err(err(0, ParseErrorKind::Empty));
    }
    Ok(done)
}
