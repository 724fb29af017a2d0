use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid key {key:#x}: keys must be nonzero and fit in {width} bits")]
    InvalidKey { key: u64, width: u32 },
    #[error("key {0:#x} appears more than once")]
    DuplicateKey(u64),
    #[error("sketch parameters differ")]
    ParamsMismatch,
    #[error("search budget of {0} exceeded")]
    BudgetExceeded(u64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
