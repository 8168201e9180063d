use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unrecognized line")]
    Syntax,
    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),
    #[error("vertex `{0}` declared twice")]
    DuplicateVertex(String),
    #[error("undeclared vertex `{0}`")]
    DanglingVertex(String),
    #[error("parallel edges between `{0}` and `{1}`")]
    ParallelEdges(String, String),
    #[error("edge inside triple `{0}`")]
    EdgeWithinTriple(String),
    #[error("second probe edge (first on line {0})")]
    SecondProbe(usize),
    #[error("self-loop at `{0}`")]
    SelfLoop(String),
    #[error("probe endpoint `{0}` is neither a triple's base point nor a time-pinned singleton")]
    ProbeEndpoint(String),
    #[error("equal-time edge needs time-pinned endpoints, `{0}` is free")]
    EqualTimeEndpoint(String),
    #[error("`mark` only applies to the probe edge")]
    MarkOnPropagator,
    #[error("no graph declared")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("graph too large for exhaustive enumeration: {vertices} vertices, {edges} edges ({subsets} edge subsets; limits {max_vertices} vertices, {max_edges} edges)")]
    TooLarge { vertices: usize, edges: usize, subsets: u128, max_vertices: usize, max_edges: usize },
}
