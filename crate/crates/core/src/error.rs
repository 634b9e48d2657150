use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be a probability in [0,1], got {value}")]
    NotAProbability { name: &'static str, value: f64 },
    #[error("alpha+beta must be < 1, got {sum}")]
    OutsideDomain { sum: f64 },
    #[error("q must be < 1 for region geometry")]
    DegenerateFailure,
    #[error("total error L must be positive")]
    ZeroError,
    #[error("{name} must lie in (0,1), got {value}")]
    OpenUnitInterval { name: &'static str, value: f64 },
    #[error("n must be a positive power of two, got {0}")]
    NotPowerOfTwo(u64),
    #[error("height {height} is {found}, expected {expected} (use the other theorem)")]
    WrongParity {
        height: u32,
        found: &'static str,
        expected: &'static str,
    },
    #[error("no N = 4^m <= 2^62 satisfies the requested error level")]
    SensorCountOverflow,
    #[error("enumeration infeasible: level {level} would hold more than {cap} profiles")]
    EnumerationInfeasible { level: u32, cap: usize },
    #[error("height {0} exceeds the supported maximum of {1}")]
    HeightTooLarge(u32, u32),
    #[error("trials must be positive")]
    NoTrials,
    #[error("{0}")]
    InvalidParameter(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotAProbability { .. } | Error::OpenUnitInterval { .. } => "range",
            Error::OutsideDomain { .. } => "domain",
            Error::DegenerateFailure => "degenerate",
            Error::ZeroError => "zero-error",
            Error::NotPowerOfTwo(_) | Error::WrongParity { .. } => "sensor-count",
            Error::SensorCountOverflow => "overflow",
            Error::EnumerationInfeasible { .. } | Error::HeightTooLarge(..) => "infeasible",
            Error::NoTrials | Error::InvalidParameter(_) => "parameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
