//! Constant-coefficient test system with a repeated eigenvalue.
//!
//! `f^x(U) = U` and `f^y(U) = A U` with a symmetric `A` whose spectrum is
//! `{-1, 0.3, 0.3, 1}`. Every field is linearly degenerate, the change of
//! variables `V = f^x(U)` is the identity, and every downstream quantity has
//! a closed form, which makes this system the reference fixture for the
//! eigenstructure, averaging, and Riemann modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::systems::{State, System};

#[derive(Debug, Clone)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    radius: f64,
}

impl LinearSystem {
    pub fn new() -> Self {
        Self::with_radius(1.0)
    }

    pub fn with_radius(radius: f64) -> Self {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.3,
            ],
        );
        LinearSystem { a, radius }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl Default for LinearSystem {
    fn default() -> Self {
        Self::new()
    }
}

impl System for LinearSystem {
    fn dim(&self) -> usize {
        4
    }

    fn name(&self) -> &'static str {
        "linear"
    }

    fn flux_x(&self, u: &State) -> Result<DVector<f64>> {
        self.validate(u)?;
        Ok(u.0.clone())
    }

    fn flux_y(&self, u: &State) -> Result<DVector<f64>> {
        self.validate(u)?;
        Ok(&self.a * &u.0)
    }

    fn jac_x(&self, u: &State) -> Result<DMatrix<f64>> {
        self.validate(u)?;
        Ok(DMatrix::identity(4, 4))
    }

    fn jac_y(&self, u: &State) -> Result<DMatrix<f64>> {
        self.validate(u)?;
        Ok(self.a.clone())
    }

    fn entropy(&self, u: &State) -> Result<f64> {
        self.validate(u)?;
        Ok(0.5 * u.0.norm_squared())
    }

    fn entropy_flux_x(&self, u: &State) -> Result<f64> {
        self.entropy(u)
    }

    fn entropy_flux_y(&self, u: &State) -> Result<f64> {
        self.validate(u)?;
        Ok(0.5 * (u.0.transpose() * &self.a * &u.0)[(0, 0)])
    }

    fn entropy_grad(&self, u: &State) -> Result<DVector<f64>> {
        self.validate(u)?;
        Ok(u.0.clone())
    }

    fn entropy_hessian(&self, u: &State) -> Result<DMatrix<f64>> {
        self.validate(u)?;
        Ok(DMatrix::identity(4, 4))
    }

    fn background(&self) -> State {
        State(DVector::zeros(4))
    }

    fn radius(&self) -> f64 {
        self.radius
    }

    fn validate(&self, u: &State) -> Result<()> {
        if u.0.len() != 4 {
            return Err(Error::Domain(format!(
                "expected 4 components, got {}",
                u.0.len()
            )));
        }
        if u.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite state entry".into()));
        }
        Ok(())
    }
}
