use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain size mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("domain must contain at least one element")]
    EmptyDomain,

    #[error("invalid probability mass: {0}")]
    InvalidMass(String),

    #[error("invalid interval [{lo}, {hi}] for domain of size {n}")]
    InvalidInterval { lo: usize, hi: usize, n: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("interval [{lo}, {hi}] carries zero mass")]
    ZeroMass { lo: usize, hi: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no samples supplied")]
    EmptySamples,

    #[error("sample {index} lies outside the domain [1, {n}]")]
    SampleOutOfRange { index: usize, n: usize },

    #[error("sample source exhausted after {drawn} draws")]
    SamplerExhausted { drawn: usize },

    #[error("p({index}) = {mass} lies outside the band [{p_min}, {p_max}]")]
    OutOfBand {
        index: usize,
        mass: f64,
        p_min: f64,
        p_max: f64,
    },

    #[error("support size overflow: {0}")]
    SupportOverflow(String),

    #[error("sample budget overflow: {0}")]
    BudgetOverflow(String),

    #[error("failed to generate instance: {0}")]
    Instance(String),

    #[error("serialization error: {0}")]
    Serialization(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by I/O rather than by the caller's inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.to_string())
        } else {
            Error::Serialization(e.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::Serialization(e.to_string())
        }
    }
}

pub(crate) fn check_unit_open(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{value} must lie in (0, 1)")))
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{value} must be positive")))
    }
}
