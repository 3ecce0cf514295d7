use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// Variants are grouped by the process exit code they map to, see
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("dataset integrity error: {0}")]
    Integrity(String),

    #[error("capacity exceeded: {what} requires {required} entries, cap is {cap}")]
    Capacity {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error("singular information matrix; deficient parameter(s): {}", .params.join(", "))]
    Singular { params: Vec<String> },

    #[error("matrix is not positive semidefinite (pivot {pivot} = {value:e})")]
    Factorization { pivot: usize, value: f64 },

    #[error("model not identified; collinear coefficient(s): {}", .coefs.join(", "))]
    Identification { coefs: Vec<String> },

    #[error("separation detected; coefficient(s) diverge: {}", .coefs.join(", "))]
    Separation { coefs: Vec<String> },

    #[error("willingness to pay undefined: price coefficient `{0}` is numerically zero")]
    UndefinedWtp(String),

    #[error("design search failed: {0}")]
    SearchFailure(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 input/schema, 3 numerical, 4 search failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_)
            | Error::Schema(_)
            | Error::Config(_)
            | Error::Integrity(_)
            | Error::Capacity { .. }
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::Singular { .. }
            | Error::Factorization { .. }
            | Error::Identification { .. }
            | Error::Separation { .. }
            | Error::UndefinedWtp(_) => 3,
            Error::SearchFailure(_) => 4,
        }
    }

    /// Short machine-readable tag used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::Schema(_) => "schema",
            Error::Config(_) => "config",
            Error::Integrity(_) => "integrity",
            Error::Capacity { .. } => "capacity",
            Error::Singular { .. } => "singular",
            Error::Factorization { .. } => "factorization",
            Error::Identification { .. } => "identification",
            Error::Separation { .. } => "separation",
            Error::UndefinedWtp(_) => "undefined_wtp",
            Error::SearchFailure(_) => "search_failure",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
