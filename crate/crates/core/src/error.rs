//! Error types, one enum per layer.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: (L={}, n={}) vs (L={}, n={})", left.0, left.1, right.0, right.1)]
    GridMismatch { left: (f64, usize), right: (f64, usize) },
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field is not real: max |Im| = {max_imag:e} against scale {scale:e}")]
    NotReal { max_imag: f64, scale: f64 },
    #[error("near-boundary evaluation at {point}: distance {distance:e} to the curve is below {limit:e}")]
    NearBoundary { point: Complex64, distance: f64, limit: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("integrand returned a non-finite value at x = {x}")]
    NonFinite { x: f64 },
    #[error("tolerance not reached after {subdivisions} subdivisions (error estimate {error:e})")]
    NotConverged { subdivisions: usize, error: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GevreyError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("Gevrey radius exhausted at t = {t}: phi = {phi}")]
    ExhaustedRadius { t: f64, phi: f64 },
    #[error("invalid Gevrey parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaylorError {
    #[error("invalid pair configuration: {0}")]
    InvalidPair(String),
    #[error("circulation must be nonzero")]
    ZeroLambda,
    #[error("point {0} is not in the open lower half-plane")]
    NotLowerHalfPlane(Complex64),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("vortex {index} at {position} is {distance:e} from the interface, below the limit {limit:e}")]
    VortexTooClose { index: usize, position: Complex64, distance: f64, limit: f64 },
    #[error("vortex {index} at {position} is not below the interface (min Im Z = {min_im_z})")]
    VortexAboveInterface { index: usize, position: Complex64, min_im_z: f64 },
    #[error("vortex index {0} out of range")]
    NoSuchVortex(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Gevrey(#[from] GevreyError),
    #[error(transparent)]
    Taylor(#[from] TaylorError),
    #[error("time step {dt} exceeds the stability limit {limit} (advective {advective}, dispersive {dispersive})")]
    Cfl { dt: f64, limit: f64, advective: f64, dispersive: f64 },
    #[error("Picard iteration did not converge in {iterations} iterations; change history {history:?}")]
    PicardDiverged { iterations: usize, history: Vec<f64> },
    #[error("invalid initial data: {0}")]
    InvalidInitial(String),
    #[error("invalid integrator setting: {0}")]
    InvalidIntegrator(String),
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("key `{key}`: invalid value {value:?} ({reason})")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("keys `vortex.gamma` and `vortex.lambda` are mutually exclusive; give exactly one")]
    GammaLambdaConflict,
    #[error("one of `vortex.gamma` or `vortex.lambda` is required")]
    NoStrength,
}
