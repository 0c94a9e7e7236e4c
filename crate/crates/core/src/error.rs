use thiserror::Error;

/// Errors raised anywhere in the fitting and spectral pipeline.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("time series is empty")]
    EmptySeries,

    #[error("times and values differ in length: {times} times, {values} values")]
    LengthMismatch { times: usize, values: usize },

    #[error("observation times must be strictly increasing; violated at index {index} ({prev} then {next})")]
    NonMonotoneTimes { index: usize, prev: f64, next: f64 },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("time span is degenerate: first and last instants are both {0}")]
    DegenerateSpan(f64),

    #[error("observation {index} at t={time} lies {offset} from the nearest grid point (tolerance {tol})")]
    GridMismatch {
        index: usize,
        time: f64,
        offset: f64,
        tol: f64,
    },

    #[error("observations {first} and {second} both map to grid index {grid_index}")]
    IndexCollision {
        first: usize,
        second: usize,
        grid_index: i64,
    },

    #[error("domain is degenerate: t_min={t_min} must be below t_max={t_max}")]
    DegenerateDomain { t_min: f64, t_max: f64 },

    #[error("{count} evaluation time(s) fall outside the spline domain [{lo}, {hi}], first offending indices {indices:?}")]
    OutOfDomain {
        lo: f64,
        hi: f64,
        count: usize,
        indices: Vec<usize>,
    },

    #[error("penalty order {order} must be below the basis size {basis_size}")]
    OrderTooHigh { order: usize, basis_size: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("design has no basis columns")]
    EmptyBasis,

    #[error("reflection frequency for j={j} is non-positive ({value})")]
    NonPositiveResult { j: i64, value: f64 },

    #[error("penalized normal equations are not positive definite (smallest pivot {smallest_pivot:e})")]
    SingularSystem { smallest_pivot: f64 },

    #[error("unpenalized system is underdetermined: {n} observations for {c} coefficients")]
    Underdetermined { n: usize, c: usize },

    #[error("residual degrees of freedom vanish: edf={edf} with N={n}")]
    DegenerateDof { edf: f64, n: usize },

    #[error("every configuration in the tuning grid failed to fit")]
    AllFitsFailed,

    #[error("unknown model component: {0}")]
    UnknownComponent(String),

    #[error("need at least 2 replicate curves, got {0}")]
    TooFewReplicates(usize),

    #[error("probability {0} is outside (0, 1)")]
    OutOfRange(f64),

    #[error("spectral window transform entry {index} has modulus {modulus:e}, below floor {floor:e}")]
    WindowTransformUnderflow {
        index: usize,
        modulus: f64,
        floor: f64,
    },

    #[error("deconvolved spectrum has imaginary part {max_imag:e} against real scale {max_real:e}")]
    ImaginaryResidue { max_imag: f64, max_real: f64 },

    #[error("AR(2) coefficients ({phi1}, {phi2}) lie outside the stationarity triangle")]
    NonStationary { phi1: f64, phi2: f64 },

    #[error("spectral density is non-positive ({value:e}) at lambda={lambda} inside the requested band")]
    NonPositivePsd { lambda: f64, value: f64 },

    #[error("frequency band [{lo}, {hi}] contains no grid frequencies")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("invalid range: lower bound {lo} must be below upper bound {hi}")]
    BadRange { lo: f64, hi: f64 },

    #[error("bad block partition: {0}")]
    BadPartition(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem { .. }
                | Error::DegenerateDof { .. }
                | Error::AllFitsFailed
                | Error::WindowTransformUnderflow { .. }
                | Error::ImaginaryResidue { .. }
                | Error::NonPositivePsd { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
