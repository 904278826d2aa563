use thiserror::Error;

/// Errors raised while building, reducing or solving a problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution in {what}: {detail}")]
    InvalidDistribution { what: String, detail: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("edge set is empty")]
    EmptyEdgeSet,

    #[error("vertex v={0} has no incident edge")]
    IsolatedVertex(usize),

    #[error("output w={0} is unreachable from every edge")]
    UnreachableOutput(usize),

    #[error("duplicate edge (v={v}, u={u})")]
    DuplicateEdge { v: usize, u: usize },

    #[error("negative or non-finite loss {value} on edge (v={v}, u={u})")]
    InvalidLoss { v: usize, u: usize, value: f64 },

    #[error("weight is positive off the edge set at (v={v}, u={u})")]
    SupportViolation { v: usize, u: usize },

    #[error("problem is not Markov: p(w|u,v) varies with u for v={v}")]
    NotMarkov { v: usize },

    #[error("no reconstruction is adjacent to every vertex of common-part block {block}")]
    NoUniversalReconstruction { block: usize },

    #[error("joint distribution has an all-zero {axis} at index {index}")]
    DegenerateJoint { axis: &'static str, index: usize },

    #[error("contraction violates condition {condition}: {witness}")]
    InvalidContraction {
        condition: &'static str,
        witness: String,
    },

    #[error("every candidate of row v={0} has zero weight")]
    AllZeroRow(usize),

    #[error("root of G(s) = {target} not bracketed (searched up to |s| = {limit:e})")]
    RootNotBracketed { target: f64, limit: f64 },

    #[error("loss budget {loss} is below the minimum achievable loss {l_min}")]
    InfeasibleLoss { loss: f64, l_min: f64 },

    #[error("invalid solve options: {0}")]
    InvalidOptions(String),

    #[error("tuple alphabet of size {size} exceeds the cap {cap}")]
    AlphabetOverflow { size: u128, cap: u64 },

    #[error("argument {value} outside the domain of {what}")]
    DomainError { what: &'static str, value: f64 },

    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),

    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
