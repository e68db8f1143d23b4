use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("involution is not an involution: {0}")]
    NotInvolution(String),
    #[error("edge {0} violates h(inv e) = t(e)")]
    NotOrientationReversing(usize),
    #[error("invalid vertex {vertex} (graph has {count} vertices)")]
    InvalidVertex { vertex: usize, count: usize },
    #[error("invalid edge {edge} (graph has {count} directed edges)")]
    InvalidEdge { edge: usize, count: usize },
    #[error("size bound exceeded: {0}")]
    SizeBoundExceeded(String),
    #[error("not a morphism: {0}")]
    NotAMorphism(String),
    #[error("parity mismatch: model {model} needs {needed} n, got n = {n}")]
    ParityMismatch {
        model: &'static str,
        needed: &'static str,
        n: usize,
    },
    #[error("model {0} does not allow half-loops in the base graph")]
    HalfLoopsForbidden(&'static str),
    #[error("projection is not etale: {0}")]
    NotEtale(String),
    #[error("model unsupported: {0}")]
    ModelUnsupported(String),
    #[error("cross-check failed: {0}")]
    CrossCheckFailed(String),
    #[error("base graph is not d-regular with d >= 3")]
    NotRegularBase,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("bead set is not proper: {0}")]
    NotProperBeadSet(String),
    #[error("walk is not non-backtracking")]
    NotNonBacktracking,
    #[error("half-loop edge {0} must have length 1")]
    HalfLoopLengthNotOne(usize),
    #[error("bound too large: {0}")]
    BoundTooLarge(String),
    #[error("catalog was built for a different query")]
    CatalogMismatch,
    #[error("the given subgraph does not occur in the cover")]
    SubgraphNotPresent,
    #[error("invalid wording: {0}")]
    InvalidWording(String),
    #[error("ill-conditioned system (condition number {0:e})")]
    IllConditioned(f64),
    #[error("walk length {k} exceeds cover degree {n}")]
    LengthExceedsDegree { k: usize, n: usize },
    #[error("need at least {needed} grid points, got {got}")]
    InsufficientGrid { needed: usize, got: usize },
    #[error("need at least {needed} trials, got {got}")]
    InsufficientTrials { needed: usize, got: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid walk: {0}")]
    InvalidWalk(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Errors that stem from exhausting a computational budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded(_) | Error::SizeBoundExceeded(_) | Error::BoundTooLarge(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
