use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is not connected")]
    GraphNotConnected,

    #[error("could not draw a connected random geometric graph after {attempts} attempts")]
    GraphGenerationFailed { attempts: usize },

    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),

    #[error("symmetric eigen-decomposition did not converge")]
    SpectralFailure,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("Riccati iteration did not converge in {iterations} iterations (last step {last_change:e})")]
    RiccatiDivergence { iterations: usize, last_change: f64 },

    #[error("(F, H) is not observable: observability rank {rank} < {n}")]
    Observability { rank: usize, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step sizes violate the stability bound: {0}")]
    StabilityGuard(String),

    #[error("node {node} at step {t}: {source}")]
    AtNode { node: usize, t: usize, source: Box<Error> },

    #[error("wire schema violation: {0}")]
    WireSchema(String),

    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
