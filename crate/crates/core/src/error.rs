use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("composition error: {0}")]
    Composition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error at vertex {vertex}: {message}")]
    Numerical { vertex: String, message: String },
    #[error("invalid germ: {0}")]
    InvalidGerm(String),
    #[error("constants not sequentially small: {0}")]
    Constants(String),
    #[error("not arboreal at ({x}, {y}): {message}")]
    NotArboreal { x: f64, y: f64, message: String },
    #[error("size guard: {0}")]
    TooLarge(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used as the CLI error prefix.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Validation(_) => "validation",
            Error::Composition(_) => "composition",
            Error::Domain(_) => "domain",
            Error::Numerical { .. } => "numerical",
            Error::InvalidGerm(_) => "invalid-germ",
            Error::Constants(_) => "constants",
            Error::NotArboreal { .. } => "not-arboreal",
            Error::TooLarge(_) => "size-guard",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
