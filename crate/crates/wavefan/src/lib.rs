//! Construction and verification of steady, self-similar solutions of 2-D
//! hyperbolic conservation-law systems near a supersonic constant state.
//!
//! A steady solution that is constant along rays `xi = y/x` satisfies an
//! eigenvalue problem for the flux pencil `(f_U^x, f_U^y)`. After the change
//! of variables `V = f^x(U)` this becomes an ordinary eigenproblem for
//! `f_V = f_U^y (f_U^x)^{-1}`, and all wave phenomena concentrate in thin
//! sectors around the background eigenvalues. This crate provides:
//!
//! - [`systems`]: the physical-system abstraction (fluxes, entropy pair,
//!   phase-space ball) with full Euler and a constant-coefficient test system;
//! - [`pencil`]: generalized eigenstructure with constant-multiplicity
//!   grouping, genuinely-nonlinear / linearly-degenerate classification, and
//!   resolvent-contour total projections;
//! - [`averaging`]: path-averaged and entropy-symmetrized (Harten–Lax)
//!   averaged matrices, Rankine–Hugoniot and entropy-jump residuals;
//! - [`waves`]: Hugoniot loci, simple waves, and multi-dimensional contact
//!   leaves with the intermediate-state projection solve;
//! - [`riemann`]: the forward-sector Riemann solver and fan composition;
//! - [`structure`]: sector maps and verification of constancy, wave-count
//!   rules, weak-form residuals, and the SBV (jump + Lipschitz) split;
//! - [`profile`]: sampled profiles and their CSV encoding.

pub mod averaging;
pub mod error;
pub mod linalg;
pub mod pencil;
pub mod profile;
pub mod riemann;
pub mod structure;
pub mod systems;
pub mod waves;

pub use error::{Error, Result};
pub use systems::{EulerParams, State, System};
