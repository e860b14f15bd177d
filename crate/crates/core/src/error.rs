//! Error type shared by the core modules.

use alloc::string::String;
use core::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreError {
    InvalidName(String),
    ReservedName(String),
    DuplicateName(String),
    /// Expression parsing failed; byte offset and message.
    Parse {
        position: usize,
        message: String,
    },
    /// An identifier was used that the symbol table does not know.
    Undeclared {
        position: usize,
        name: String,
    },
    /// A symbol of a kind the operation forbids appeared in its input.
    ForbiddenSymbol {
        symbol: String,
        context: &'static str,
    },
    /// Simultaneous substitution bindings form a dependency cycle.
    SubstitutionCycle(String),
    /// Linear system has no solution over the expression field.
    Inconsistent(String),
    /// Momentum bindings could not be triangularized into solved velocities
    /// plus velocity-free relations.
    EliminationFailed(String),
    /// A supplied or derived object failed a structural verification.
    Verification(String),
    /// Reduction modulo a constraint set is outside the supported fragment.
    UnsupportedReduction(String),
    /// Vector fields live on different spaces.
    SpaceMismatch(String),
    /// Stabilization exceeded the configured depth.
    DepthExceeded(u32),
    /// Ansatz-based decomposition failed; carries the irreducible remainder.
    AnsatzFailed(String),
    /// Numeric probe could not find admissible sample points.
    ProbeDomain(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidName(n) => write!(f, "invalid name: {n:?}"),
            CoreError::ReservedName(n) => write!(f, "name is reserved for a function: {n}"),
            CoreError::DuplicateName(n) => write!(f, "name declared twice: {n}"),
            CoreError::Parse { position, message } => {
                write!(f, "parse error at offset {position}: {message}")
            }
            CoreError::Undeclared { position, name } => {
                write!(f, "undeclared identifier {name:?} at offset {position}")
            }
            CoreError::ForbiddenSymbol { symbol, context } => {
                write!(f, "symbol {symbol} is not allowed in {context}")
            }
            CoreError::SubstitutionCycle(s) => write!(f, "substitution bindings cycle through {s}"),
            CoreError::Inconsistent(what) => write!(f, "linear system inconsistent: {what}"),
            CoreError::EliminationFailed(what) => {
                write!(f, "momentum bindings not triangularizable: {what}")
            }
            CoreError::Verification(what) => write!(f, "verification failed: {what}"),
            CoreError::UnsupportedReduction(what) => {
                write!(f, "unsupported reduction: {what}")
            }
            CoreError::SpaceMismatch(what) => write!(f, "vector field space mismatch: {what}"),
            CoreError::DepthExceeded(n) => {
                write!(f, "constraint stabilization exceeded depth {n}")
            }
            CoreError::AnsatzFailed(rem) => {
                write!(f, "linear-combination ansatz failed; remainder {rem}")
            }
            CoreError::ProbeDomain(what) => write!(f, "numeric probe domain failure: {what}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
