use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("coordinate left the representable range of the lattice encoding")]
    CoordinateOverflow,
    #[error("event budget of {0} events exhausted")]
    EventBudget(u64),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("truncated probability mass {dropped:e} exceeds budget {budget:e}")]
    TailBudget { dropped: f64, budget: f64 },
    #[error("not enough data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
