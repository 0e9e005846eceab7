use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown graph kind `{0}`")]
    UnknownGraphKind(String),

    #[error("unsupported set kind for {0}")]
    UnsupportedSet(&'static str),

    #[error("non-positive push-sum weight {value} at node {node}")]
    NonPositiveWeight { node: usize, value: f64 },

    #[error("non-finite value in {what} at node {node}")]
    NonFinite { what: &'static str, node: usize },

    #[error("cost at node {node}, round {t} is not strongly convex")]
    NotStronglyConvex { node: usize, t: usize },

    #[error("inner solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("missing optimum for round {0}")]
    MissingRound(usize),

    #[error("round {t}: {source}")]
    AtRound {
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn at_round(self, t: usize) -> Self {
        Error::AtRound {
            t,
            source: Box::new(self),
        }
    }

    /// Strips any round annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtRound { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for failures caused by numerical pathologies rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self.root(),
            Error::NonPositiveWeight { .. } | Error::NonFinite { .. } | Error::NoConvergence { .. }
        )
    }
}
