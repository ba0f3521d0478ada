use thiserror::Error;

/// Crate-wide error type.
///
/// Variants carry enough context to produce a useful one-line diagnostic;
/// the CLI serializes them into a machine-readable JSON object on stderr.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation. `field` is the dotted path
    /// into the configuration document (e.g. `channel.tx_power`).
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// A topology document or generation request is invalid.
    #[error("topology: {0}")]
    Topology(String),

    /// A channel parameter or link request is invalid.
    #[error("channel: {0}")]
    Channel(String),

    /// Node `node` asked for a link to itself or to a non-neighbor.
    #[error("link ({from}, {to}): {message}")]
    Link {
        from: usize,
        to: usize,
        message: String,
    },

    /// A combination rule received invalid inputs.
    #[error("combination weights: {0}")]
    Combine(String),

    /// A runtime contract the simulation relies on was violated
    /// (e.g. weights that should sum to one do not).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Dimensions of two objects that must agree do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A closed-form expression is not defined for these inputs
    /// (e.g. an asymptotic limit of an unstable recursion).
    #[error("analysis: {0}")]
    Analysis(String),

    /// An I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A JSON document failed to parse or serialize.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
