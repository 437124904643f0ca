use thiserror::Error;

/// Errors surfaced by the library.
///
/// Infeasibility of a pairing or an allocation is *not* an error; it is
/// reported as a value inside the relevant report type.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("bracket failure: {0}")]
    Bracket(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("instance too large for exhaustive search: n = {n}, limit = {limit}")]
    TooLarge { n: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
