use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("polytope is empty")]
    InfeasiblePolytope,

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("simulation stuck at t={time}: no active mode at state {state:?}")]
    SimulationStuck { time: f64, state: Vec<f64> },

    #[error("candidate cannot be decoded: coefficient of proposition {0} is zero")]
    Undecodable(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with every layer of context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
