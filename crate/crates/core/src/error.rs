use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("all snapshots are zero; the correlation matrix is degenerate")]
    DegenerateSnapshots,

    #[error("requested POD rank {requested} exceeds the numerical snapshot rank {rank}")]
    RankExceeded { requested: usize, rank: usize },

    #[error("runs are not comparable: {0}")]
    InvalidComparison(String),

    #[error("solve failed at collocation node {coords:?}: {source}")]
    AtNode {
        coords: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of a numerical solve, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::SolverDiverged { .. } | Error::DegenerateSnapshots => true,
            Error::AtNode { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
