use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An ensemble specification violates its own constraints.
    #[error("rejected configuration: {0}")]
    InvalidConfig(String),

    /// The configuration-model sampler ran out of re-pairing attempts.
    #[error("sampling failed after {attempts} full re-pairings")]
    SamplingFailed { attempts: usize },

    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An exhaustive computation would exceed its enumeration budget.
    #[error("capacity exceeded: {what} is {value}, limit is {limit}")]
    Capacity {
        what: &'static str,
        value: usize,
        limit: usize,
    },
}
