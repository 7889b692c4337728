use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("base point mismatch: distance {0:e}")]
    BaseMismatch(f64),
    #[error("jet order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("newton iteration failed: {0}")]
    Newton(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("not partially hyperbolic: {0}")]
    NotPartiallyHyperbolic(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Coarse classification used by the CLI to pick an exit code.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownIdentifier(_)
                | Error::UnboundParameter(_)
                | Error::Config { .. }
                | Error::Io(_)
                | Error::Precondition(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
