use thiserror::Error;

/// Error taxonomy for the solver pipeline.
///
/// Domain violations and numerical breakdowns are reported as values;
/// panics are reserved for internal logic errors.
#[derive(Debug, Error)]
pub enum Error {
    /// Rectangle parameters violate the supported ranges.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A side of half-length 2 makes the constant-mode density amplitude
    /// singular (its log factor vanishes).
    #[error("degenerate side of half-length 2: constant-mode amplitude is undefined")]
    DegenerateSegment,

    /// Evaluation requested outside the valid domain of the operation.
    #[error("evaluation outside domain: {0}")]
    OutOfDomain(String),

    /// Input dimensions are inconsistent with the geometry.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Side expansions of a boundary trace disagree at a shared corner.
    #[error("corner mismatch {gap:.3e} exceeds tolerance {tol:.3e}")]
    CornerMismatch { gap: f64, tol: f64 },

    /// Adaptive quadrature hit its subdivision cap before reaching the
    /// requested tolerance.  The achieved error estimate is reported.
    #[error("quadrature did not converge: error estimate {achieved:.3e} exceeds tolerance {requested:.3e} after {panels} panels")]
    QuadratureNoConvergence {
        achieved: f64,
        requested: f64,
        panels: usize,
    },

    /// An eigendecomposition or factorization failed or produced
    /// non-finite output.
    #[error("solver breakdown: {0}")]
    SolverBreakdown(String),
}
