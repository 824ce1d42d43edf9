//! Crate-wide error type.
//!
//! Every fallible public operation in this crate returns [`Result`]. The
//! variants are grouped by failure class rather than by module so that
//! callers can match on the kind of problem (bad input, numerical
//! degeneracy, resource limit, malformed file) without caring where inside
//! the engine it surfaced.

use thiserror::Error;

/// Unified error type for tensor, state, circuit, and harness operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor shapes or bond dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// An argument is out of range or structurally invalid.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The SVD backend failed to converge or returned a factorization that
    /// does not carry the input's Frobenius weight.
    #[error("SVD failed to produce a valid factorization for a {rows}x{cols} matrix")]
    SvdNonConvergence { rows: usize, cols: usize },

    /// A state or spectrum is numerically zero where a nonzero value is
    /// required (e.g. normalizing a zero state, truncating away all weight).
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// Bond weights are too ill-conditioned to invert.
    #[error("ill-conditioned bond weights: {0}")]
    IllConditioned(String),

    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// Two gates in the same layer act on the same qubit.
    #[error("overlapping gates in layer: {0}")]
    OverlappingGates(String),

    /// A circuit cannot be mapped onto the nearest-neighbor path.
    #[error("unsupported circuit layout: {0}")]
    UnsupportedLayout(String),

    /// A size or cost guard was exceeded (e.g. dense statevector too large).
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A text or binary input could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A run configuration is inconsistent or contains unknown keys.
    #[error("configuration error: {0}")]
    Config(String),

    /// An underlying I/O operation failed.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
