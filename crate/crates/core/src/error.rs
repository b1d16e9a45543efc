use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cavity decay rate must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("momentum truncation n_max = {0} is too small (need at least 2)")]
    TruncationTooSmall(usize),
    #[error("grid of {grid_points} points is too coarse (need at least {required})")]
    GridTooCoarse { grid_points: usize, required: usize },
    #[error("parameter `{0}` is not finite")]
    NonFiniteValue(&'static str),
    #[error("invalid value for `{name}`: {reason}")]
    InvalidValue { name: &'static str, reason: String },

    #[error("condensate is not normalized (norm = {norm})")]
    UnnormalizedState { norm: f64 },
    #[error("state dimension mismatch: expected {expected} amplitudes, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    TooManySteps { max_steps: usize, t: f64 },

    #[error("imaginary-time iteration did not converge after {iterations} steps (residual {residual:e}, theta {theta})")]
    NoConvergence { iterations: usize, residual: f64, theta: f64 },
    #[error("imaginary-time residual oscillates without decaying (residual {residual:e})")]
    OscillatoryResidual { residual: f64, theta: f64 },

    #[error("linear stability analysis requires g1d = 0")]
    InteractionUnsupported,
    #[error("steady state residual {residual:e} exceeds gate {gate:e}")]
    BadSteadyState { residual: f64, gate: f64 },
    #[error("eigenvalue solver failed to converge")]
    EigenSolverFailure,

    #[error("analysis window of length {length} is shorter than {minimum}")]
    WindowTooShort { length: f64, minimum: f64 },
    #[error("time series is not uniformly sampled")]
    NonuniformSampling,
    #[error("spectrum carries no power after removing the mean")]
    DegenerateSpectrum,
    #[error("trajectory ends at t = {t_end}, analysis requires t >= {required}")]
    TrajectoryTooShort { t_end: f64, required: f64 },
    #[error("trajectory does not record chi_{0}")]
    MissingObservable(usize),
    #[error("orbits cannot be compared: {0}")]
    IncompatibleOrbits(String),

    #[error("{excluded} of {total} trajectories became non-finite")]
    ExcessiveFailures { excluded: usize, total: usize },

    #[error("checkpoint belongs to a different configuration (expected {expected}, found {found})")]
    ResumeMismatch { expected: String, found: String },
    #[error("malformed file: {0}")]
    Format(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::NonFiniteState { .. }
                | Error::TooManySteps { .. }
                | Error::NoConvergence { .. }
                | Error::OscillatoryResidual { .. }
                | Error::BadSteadyState { .. }
                | Error::EigenSolverFailure
                | Error::DegenerateSpectrum
                | Error::ExcessiveFailures { .. }
        )
    }
}
