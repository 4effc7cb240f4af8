use thiserror::Error;

/// Errors raised by the hetmac library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible allocation in component {component}: {reason}")]
    InfeasibleAllocation { component: usize, reason: String },

    #[error("unsupported QAM order {0} bits (orders must be even and at least 2)")]
    UnsupportedOrder(u32),

    #[error("constellation too large: {size} points exceeds the cap of {cap}")]
    ConstellationTooLarge { size: u128, cap: usize },

    #[error("enumeration too large: {size} allocations exceeds the cap of {cap}")]
    EnumerationTooLarge { size: u128, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
