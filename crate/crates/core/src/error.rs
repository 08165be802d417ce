use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (pivot {pivot:e} in column {column})")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("eigenvalue iteration did not converge within {budget} sweeps")]
    NoConvergence { budget: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("parallel edge {tail} -> {head}")]
    ParallelEdge { tail: usize, head: usize },
    #[error("edge {tail} -> {head} has non-positive or non-finite weight {weight}")]
    NonPositiveWeight { tail: usize, head: usize, weight: f64 },
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("edge index {edge} out of range ({m} edges)")]
    EdgeOutOfRange { edge: usize, m: usize },
    #[error("graph has no globally reachable node, so no rooted in-branching exists")]
    NoInBranching,
    #[error("node {0} is not globally reachable")]
    RootNotReachable(usize),

    #[error("normal-equation solve for the incidence factorization failed")]
    IllConditioned,
    #[error("signed path of edge {edge} disagrees with the least-squares factor column")]
    PathMismatch { edge: usize },

    #[error("graph is not acyclic")]
    NotAcyclic,
    #[error("graph has more than one globally reachable node")]
    MultipleGloballyReachable,
    #[error("graph is not a simple directed cycle")]
    NotSimpleCycle,
    #[error("transfer function is singular at s = {re} + {im}j")]
    SingularAtS { re: f64, im: f64 },
    #[error("rank-one update {step} has degenerate denominator {denominator:e}")]
    DegenerateUpdate { step: usize, denominator: f64 },
    #[error("closed forms disagree for edge {edge}: formula {formula}, combinatorial {combinatorial}")]
    ClosedFormMismatch {
        edge: usize,
        formula: f64,
        combinatorial: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
