use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("job {job} assigned to forbidden machine {machine}")]
    AssignedForbidden { job: usize, machine: usize },

    #[error("job {job} has no eligible machine")]
    AllForbidden { job: usize },

    #[error("machine index {machine} out of range for {machines} machines")]
    MachineOutOfRange { machine: usize, machines: usize },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("exponent {0} is not an integer; exact evaluation impossible")]
    NonIntegerExponent(f64),

    #[error("graph has {vertices} vertices, above the cap of {cap}")]
    SizeLimit { vertices: usize, cap: usize },

    #[error("no good sequence found after {0} retries")]
    RetriesExhausted(usize),

    #[error("dimension count {dims} exceeds cap {cap}")]
    CapExceeded { dims: u128, cap: u128 },

    #[error("bad parameters: {0}")]
    BadParams(String),
}
