use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario or request field failed validation. `field` is a dotted
    /// path such as `net.matrix[1][3]`.
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },

    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("eigensolver did not converge for a {0}-node Laplacian")]
    Eigensolver(usize),

    #[error("{0} is out of domain")]
    Domain(&'static str),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), message: message.into() }
    }

    /// Dotted field path for validation failures.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }
}
