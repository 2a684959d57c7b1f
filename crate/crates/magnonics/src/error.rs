//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter is outside its domain (negative field, vanishing
    /// linewidth, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The call itself is malformed: empty input, insufficient coverage, a
    /// step size that cannot resolve the dynamics.
    #[error("usage error: {0}")]
    Usage(String),

    /// A hybrid frequency was requested that no Larmor frequency reaches on
    /// the chosen branch.
    #[error("branch domain error: {0}")]
    BranchDomain(String),

    /// A scan or bracket failed; carries enough context to diagnose the run.
    #[error("diagnostic: {0}")]
    Diagnostic(String),

    /// Least-squares fit failure (no peak in window, divergence).
    #[error("fit error: {0}")]
    Fit(String),
}
