//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// State violates the physical domain (e.g. nonpositive density or
    /// internal energy).
    #[error("domain error: {0}")]
    Domain(String),

    /// A state or iterate left the phase-space ball, or an inversion seeded
    /// inside the ball failed to converge.
    #[error("state outside phase-space ball: {0}")]
    OutOfBall(String),

    /// Generalized eigenvalues are complex, or clustering does not reproduce
    /// the expected constant multiplicities.
    #[error("hyperbolicity violation: {0}")]
    Hyperbolicity(String),

    /// A field could not be classified as genuinely nonlinear or linearly
    /// degenerate (mixed or indeterminate signs of the eigenvalue gradient).
    #[error("classification error: {0}")]
    Classification(String),

    /// Eigenvector frame continuation failed (subspace tilted too far
    /// between neighboring samples).
    #[error("frame continuation error: {0}")]
    Frame(String),

    /// The resolvent contour passes too close to an eigenvalue.
    #[error("contour error: {0}")]
    Contour(String),

    /// Newton iteration on a wave locus or strength vector diverged.
    #[error("solver error: {0}")]
    Solver(String),

    /// The horizontal Jacobian has eigenvalues of mixed sign, so no convex
    /// (or concave) reduced entropy exists.
    #[error("mixed-sign horizontal spectrum: {0}")]
    MixedSignature(String),

    /// The entropy-variable map is not monotone along the averaging path.
    #[error("convexity violation: {0}")]
    Convexity(String),

    /// Waves in a composed fan overlap or are otherwise mis-ordered.
    #[error("composition error: {0}")]
    Composition(String),

    /// A composed fan violates a structural rule (e.g. consecutive simple
    /// waves in one family).
    #[error("structure error: {0}")]
    Structure(String),

    /// Invalid run configuration (tolerances, grid, ball radius).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed profile input (CSV schema violation).
    #[error("malformed input: {0}")]
    Malformed(String),
}
