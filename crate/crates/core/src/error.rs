use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("curve {curve} is not an immersed simple curve: {reason}")]
    BadCurve { curve: usize, reason: String },

    #[error("invalid curve nesting: {0}")]
    Nesting(String),

    #[error("grid of {grid} points is too coarse for Fourier degree {degree} (need at least {needed})")]
    GridTooCoarse { grid: usize, degree: usize, needed: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("point {z} is not strictly inside the domain")]
    Outside { z: Complex64 },

    #[error("point {z} is too close to the boundary (distance {dist:.3e}) for the upsampling budget")]
    NearBoundary { z: Complex64, dist: f64 },

    #[error("winding integral {value:.6} is not close to an integer (zero too close to the contour)")]
    NonIntegerWinding { value: f64 },

    #[error("zero count mismatch: expected {expected}, found {found}")]
    ZeroCount { expected: usize, found: usize },

    #[error("zero at {z} is not simple (|f'| = {derivative:.3e}); perturb the base point")]
    NonSimpleZero { z: Complex64, derivative: f64 },

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("least-squares residual {residual:.3e} exceeds tolerance {tol:.3e}: {context}")]
    Residual { residual: f64, tol: f64, context: String },

    #[error("fit stagnated at residual {best:.3e} (tolerance {tol:.3e}) after {terms} terms")]
    FitStagnation { best: f64, tol: f64, terms: usize },

    #[error("injectivity failure: {0}")]
    Injectivity(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("pole extraction failed: {0}")]
    Pole(String),

    #[error("oracle truncation insufficient: {0}")]
    Truncation(String),

    #[error("rank decision ambiguous: {0}")]
    Ambiguous(String),

    #[error("archive checksum mismatch (expected {expected}, computed {computed})")]
    Checksum { expected: String, computed: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
