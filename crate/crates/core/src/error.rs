use thiserror::Error;

/// Errors raised by the toolkit.
///
/// `Domain` covers parameter violations detected before any computation runs;
/// `Capacity` covers runs that are well-posed but too large to carry out.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Capacity(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{context}: {source}")]
    Cell {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    /// Attaches a location (grid cell, file, ...) to an error.
    pub fn in_context(self, context: impl Into<String>) -> Self {
        Error::Cell {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the root cause is a parameter-domain violation.
    pub fn is_domain(&self) -> bool {
        match self {
            Error::Domain(_) | Error::DimensionMismatch { .. } => true,
            Error::Cell { source, .. } => source.is_domain(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

fn symbol(name: &str) -> &str {
    match name {
        "alpha" => "α",
        "delta" => "δ",
        "eta" => "η",
        "epsilon" => "ε",
        "gamma" => "γ",
        _ => name,
    }
}

/// Checks `lo < x < hi`, naming the constraint in the error.
pub(crate) fn open_interval(name: &str, x: f64, lo: f64, hi: f64) -> Result<()> {
    if x > lo && x < hi {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} = {x} violates the constraint {} ∈ ({lo}, {hi})",
            symbol(name)
        )))
    }
}

pub(crate) fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} = {x} violates the constraint {name} > 0"
        )))
    }
}
