use thiserror::Error;

/// Errors raised anywhere in the liner toolkit.
#[derive(Debug, Error)]
pub enum LinerError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("frequency {f_hz} Hz lies within the guard band of the pole at {pole_hz} Hz")]
    PoleProximity { f_hz: f64, pole_hz: f64 },

    #[error("end correction is non-positive ({value_m} m); outside the model's validity")]
    EndCorrectionInvalid { value_m: f64 },

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("linear system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("sign invariant violated: k_R = {re} {im:+}i (expected Re > 0, Im < 0)")]
    SignViolation { re: f64, im: f64 },

    #[error("extrapolation needs distinct truncation radii: {0}")]
    Extrapolation(String),

    #[error("stage failed at S = {s}: {source}")]
    AtTruncation {
        s: f64,
        #[source]
        source: Box<LinerError>,
    },

    #[error("Newton iteration for lined mode {mode} diverged at homotopy step {step} (of at least {steps})")]
    ModeNewton { mode: usize, step: usize, steps: usize },

    #[error("lined modes {first} and {second} collided at homotopy step {step}")]
    ModeCollision { first: usize, second: usize, step: usize },

    #[error("degenerate admittance denominator at {f_hz} Hz (boundary operator resonance)")]
    DegenerateAdmittance { f_hz: f64 },

    #[error("impedance magnitude {magnitude:.3e} too small at {f_hz} Hz (pressure-release wall)")]
    VanishingImpedance { f_hz: f64, magnitude: f64 },

    #[error("mode-matching system ill-conditioned (estimate {condition:.3e}); try more modes or shift the frequency")]
    MatchingIllConditioned { condition: f64 },

    #[error("k_R data does not cover {f_hz} Hz (available {min_hz}..{max_hz} Hz)")]
    CoverageGap { f_hz: f64, min_hz: f64, max_hz: f64 },

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LinerError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LinerError::InvalidParameter(msg.into())
    }
}

pub type Result<T, E = LinerError> = std::result::Result<T, E>;
