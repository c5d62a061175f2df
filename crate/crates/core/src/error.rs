use thiserror::Error;

/// Errors produced by the colour-science routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point lies on the horizon of the projective transform (|h4| = {0:e})")]
    DegeneratePoint(f64),
    #[error("matrix is singular or ill-conditioned")]
    SingularMatrix,
    #[error("metric parameters are infeasible: {0}")]
    InfeasibleParams(String),
    #[error("invalid white point {0:?}: components must lie in (0, 10)")]
    InvalidWhitePoint([f64; 3]),
    #[error("key-point images collapse onto the lightness axis")]
    DegenerateKeyPoints,
    #[error("chromaticity undefined for X + Y + Z = {0:e}")]
    DegenerateChromaticity(f64),
    #[error("colour appearance model domain error: {0}")]
    ModelDomain(String),
    #[error("calibration matrix is singular")]
    SingularCalibration,
    #[error("STRESS requires non-zero vectors")]
    ZeroVector,
    #[error("STRESS inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("conversion failed for pair {index}: {source}")]
    Conversion {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("rejection sampling stalled: acceptance rate below {0:e}")]
    RejectionStall(f64),
    #[error("noise fit is degenerate: {0}")]
    DegenerateFit(String),
    #[error("negative device response {0:e}")]
    NegativeResponse(f64),
    #[error("colour is not reproducible by the camera (device response {0:?})")]
    NotReproducible([f64; 3]),
    #[error("finite-difference probe left the domain of {0}")]
    DomainEdge(String),
    #[error("every optimizer start ended infeasible")]
    NoFeasibleResult,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("data file error: {0}")]
    Data(String),
}

impl Error {
    /// True for errors that signal a violated precondition rather than a
    /// numerical breakdown.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::InvalidWhitePoint(_)
                | Error::InfeasibleParams(_)
                | Error::LengthMismatch(..)
                | Error::Data(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
