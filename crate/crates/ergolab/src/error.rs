//! Crate-wide error type.
//!
//! Variants are grouped by the operation family that raises them. The CLI
//! maps [`Error::is_validation`] to exit code 2 and everything else to 3.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // --- words and distributions ---
    /// Two weighted labelings do not describe the same atom list.
    #[error("labelings describe distinct spaces: {0}")]
    DistinctSpace(String),
    /// Not enough data for the requested block length or probe count.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Block distributions with different lengths or alphabets.
    #[error("incompatible distributions: {0}")]
    IncompatibleDistribution(String),
    /// Words of unequal length where equal length is required.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    /// A symbol at or above the alphabet size.
    #[error("symbol {symbol} out of range for alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u16, alphabet: usize },

    // --- models ---
    /// A model description violates a structural invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// Conditioning on an event of measure zero.
    #[error("null conditioning event: {0}")]
    NullConditioning(String),
    /// An enumeration guard (r^n cap or similar) would be exceeded.
    #[error("capacity exceeded: {0}")]
    CapacityExceeded(String),
    /// A path prefix has cylinder measure zero under the model.
    #[error("impossible path: zero-measure prefix of length {0}")]
    ImpossiblePath(usize),

    // --- entropy ---
    /// Derived quantities contradict each other (e.g. s > t).
    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    // --- towers ---
    /// No tower of the requested height fits the gap target.
    #[error("infeasible tower: {0}")]
    InfeasibleTower(String),

    // --- recoding ---
    /// The recoding constant C(epsilon) leaves no room below 1.
    #[error("epsilon too large: {0}")]
    EpsilonTooLarge(String),
    /// Stage digits do not fit below the M boundary.
    #[error("recoding budget exceeded: {0}")]
    BudgetExceeded(String),
    /// A word or rank is missing from a shared codebook.
    #[error("codebook error: {0}")]
    Codebook(String),
    /// A recoded column fails the marker-pattern check.
    #[error("marker desync: {0}")]
    Desync(String),
    /// A recoded column carries an index or rank outside the shared tables.
    #[error("corrupted column: {0}")]
    Corruption(String),
    /// A tower column's name pair falls outside the relative set.
    #[error("atypical column at base {base} (height {height}): {detail}")]
    AtypicalColumn {
        base: usize,
        height: usize,
        detail: String,
    },

    // --- transplant ---
    /// The conditional distribution has no support for a column name.
    #[error("unsupported column name: {0}")]
    UnsupportedName(String),

    // --- lab ---
    /// An experiment configuration failed validation before computation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that indicate bad inputs rather than runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DistinctSpace(_)
                | Error::InsufficientData(_)
                | Error::IncompatibleDistribution(_)
                | Error::LengthMismatch { .. }
                | Error::SymbolOutOfRange { .. }
                | Error::InvalidModel(_)
                | Error::CapacityExceeded(_)
                | Error::InfeasibleTower(_)
                | Error::EpsilonTooLarge(_)
                | Error::InvalidConfig(_)
        )
    }
}
