use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor rejected a value that breaks a type invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("value {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("frequency shift {f_delta_mhz} MHz exceeds the {limit_mhz} MHz locking limit")]
    BeyondLockLimit { f_delta_mhz: f64, limit_mhz: f64 },

    /// Decoy-state analysis cannot produce a usable bound at these parameters.
    #[error("infeasible bound: {0}")]
    Infeasible(String),

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty window [{start_us}, {end_us}] us")]
    EmptyWindow { start_us: f64, end_us: f64 },

    #[error("table: {0}")]
    Table(String),

    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("sweep spec `{spec}`: {reason}")]
    Sweep { spec: String, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("unknown figure `{0}` (expected fig2a, fig4, fig5, fig6 or fig7)")]
    UnknownFigure(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
