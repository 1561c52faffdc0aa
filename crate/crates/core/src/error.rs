use thiserror::Error;

/// Errors raised by the simulator, the condition solvers and the efficiency model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distribution width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("quadrature needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("comb tooth width {tooth_width} is not resolved against spacing {spacing} (need < spacing/4)")]
    UnresolvedComb { tooth_width: f64, spacing: f64 },
    #[error("comb line count must be odd and >= 3, got {0}")]
    EvenLineCount(usize),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("alpha0 = {given} inconsistent with coupling and natural width (expected {expected})")]
    InconsistentAlpha0 { given: f64, expected: f64 },
    #[error("one-photon detuning |{detuning}| is below {factor} x probe bandwidth {bandwidth}")]
    NotFarDetuned { detuning: f64, bandwidth: f64, factor: f64 },
    #[error("node is resonant with the excited state: |detuning + delta31| = {0:e}")]
    ResonantSingularity(f64),
    #[error("grid step too coarse: {what} = {value:.4} exceeds 0.5")]
    StepTooCoarse { what: &'static str, value: f64 },
    #[error("non-finite field or coherence at tau = {tau}")]
    NonFiniteField { tau: f64 },
    #[error("control field vanishes at tau = {tau} while the probe field is non-zero")]
    ControlVanishes { tau: f64 },
    #[error("Bloch physicality violated at tau = {tau}: excess {excess:e}")]
    PhysicalityViolation { tau: f64, excess: f64 },
    #[error("weak-field validity violated: {0}")]
    WeakFieldViolation(String),
    #[error("reversibility conditions unmet: {0}")]
    ConditionsUnmet(String),
    #[error("echo time would be non-causal (t2 = {t2}); try a larger rephasing order")]
    NonCausalEcho { t2: f64 },
    #[error("ratio {0} outside (0, 1]")]
    RatioOutOfRange(f64),
    #[error("input envelope carries zero energy")]
    ZeroInputEnergy,
    #[error("envelopes sampled on incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario validation error: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
