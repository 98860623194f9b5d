use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("vertices {0} and {1} are already adjacent")]
    DuplicateAdjacency(usize, usize),

    #[error("no undirected edge between {0} and {1}")]
    MissingEdge(usize, usize),

    #[error("graph contains directed arcs where an undirected graph is required")]
    HasArcs,

    #[error("graph is not chordal")]
    NotChordal,

    #[error("graph is not connected")]
    NotConnected,

    #[error("graph is not a DAG")]
    NotDag,

    #[error("arcs contain a directed cycle")]
    DirectedCycle,

    #[error("Meek rules orient the edge {0} - {1} in both directions")]
    MeekConflict(usize, usize),

    #[error("vertex sets are not pairwise disjoint")]
    OverlappingSets,

    #[error("vertex count mismatch: {0} vs {1}")]
    VertexCountMismatch(usize, usize),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conditioning event has zero probability")]
    ZeroMass,

    #[error("distribution q is zero where p is positive")]
    NotAbsolutelyContinuous,

    #[error("configurations are indistinguishable (minimum divergence is zero)")]
    Indistinguishable,

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by an exhausted size or memory budget, as
    /// opposed to malformed input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(self, Error::ResourceLimit(_))
    }
}
