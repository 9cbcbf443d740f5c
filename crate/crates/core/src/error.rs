use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: expected {expected} samples, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("grid has {n} samples, at least {min} required")]
    GridTooSmall { n: usize, min: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("sequences live on different lattice windows")]
    WindowMismatch,

    #[error("coefficient carriers do not match")]
    CarrierMismatch,

    #[error("domain too narrow: {0}")]
    DomainTooNarrow(String),

    #[error("lattice window too narrow: {0}")]
    WindowTooNarrow(String),

    #[error("time step {dt} exceeds stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("solution blew up at t = {t}")]
    Blowup { t: f64 },

    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("logarithm of non-positive argument at site {site}")]
    LogDomain { site: i64 },

    #[error("log-magnitude {log_value:.1} overflows at index {index}")]
    Overflow { index: usize, log_value: f64 },

    #[error(
        "coefficient limits ({alpha_minus}, {alpha_plus}) do not fit the requested dichotomy case"
    )]
    WrongCase { alpha_minus: f64, alpha_plus: f64 },

    #[error("data not orthogonal to the adjoint solution (pairing {pairing:.3e})")]
    NotOrthogonal { pairing: f64 },

    #[error("solution does not decay at the boundary (tail {tail:.3e})")]
    TailNotDecayed { tail: f64 },

    #[error("unexpected topology: expected kink index {expected}, found {found}")]
    UnexpectedTopology { expected: i64, found: i64 },
}

impl Error {
    /// Failures of the numerical machinery itself, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Blowup { .. }
                | Error::NoConvergence(_)
                | Error::LogDomain { .. }
                | Error::Overflow { .. }
                | Error::ResidualTooLarge { .. }
                | Error::NotOrthogonal { .. }
                | Error::TailNotDecayed { .. }
                | Error::UnexpectedTopology { .. }
                | Error::NonFinite { .. }
        )
    }
}
