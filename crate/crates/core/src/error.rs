use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The variants split into two families: configuration problems (bad
/// parameters, violated preconditions) and numerical problems (resolution
/// or tolerance failures). [`Error::is_numeric`] tells them apart.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {point:?} lies outside the sampled domain [{lo}, {hi}]")]
    OutOfDomain { point: Vec<f64>, lo: f64, hi: f64 },

    #[error("fiber has infinite mass; its spectrum is the whole real line")]
    InfiniteMass,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("confinement bound M is not set")]
    MissingBound,

    #[error("lambda {lambda} is outside the spectral gap (-{delta}, {delta}) or zero")]
    OutsideGap { lambda: f64, delta: f64 },

    #[error("frequency {xi} exceeds the resolved band [-{band}, {band}]")]
    BandExceeded { xi: f64, band: f64 },

    #[error("k window [{k_lo}, {k_hi}] does not resolve the lambda range [{lo}, {hi}]")]
    WindowTooSmall { k_lo: i64, k_hi: i64, lo: f64, hi: f64 },

    #[error("grid under-resolved: spectral tail fraction {tail:.3e} exceeds {limit:.3e}")]
    UnderResolved { tail: f64, limit: f64 },

    #[error("resampling needs data outside the grid support (edge magnitude {edge:.3e})")]
    OutsideSupport { edge: f64 },

    #[error("time step under-resolved: {0}")]
    TimeStep(String),

    #[error("insufficient sample span: {0}")]
    InsufficientSpan(String),

    #[error("too many components to materialize: {0}")]
    TooLarge(u64),
}

impl Error {
    /// True for failures that come from numerics rather than from the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::BandExceeded { .. }
                | Error::UnderResolved { .. }
                | Error::OutsideSupport { .. }
                | Error::TimeStep(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
