//! Physical-system abstraction: fluxes, entropy pair, and the phase-space
//! ball around a constant background state.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

mod euler;
mod linear;

pub use euler::{Euler, EulerParams};
pub use linear::LinearSystem;

/// Point in conserved-variable space.
#[derive(Debug, Clone, PartialEq)]
pub struct State(pub DVector<f64>);

impl State {
    pub fn new(u: DVector<f64>) -> Self {
        State(u)
    }

    pub fn from_slice(u: &[f64]) -> Self {
        State(DVector::from_column_slice(u))
    }
}

impl std::ops::Deref for State {
    type Target = DVector<f64>;
    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl std::ops::DerefMut for State {
    fn deref_mut(&mut self) -> &mut DVector<f64> {
        &mut self.0
    }
}

/// A system of two-dimensional conservation laws with an entropy pair,
/// restricted to a ball of radius [`System::radius`] around
/// [`System::background`].
///
/// All methods are pure; implementations are shared freely across threads.
pub trait System: Send + Sync {
    /// Number of conserved quantities.
    fn dim(&self) -> usize;

    fn name(&self) -> &'static str;

    /// Horizontal flux `f^x(U)`.
    fn flux_x(&self, u: &State) -> Result<DVector<f64>>;

    /// Vertical flux `f^y(U)`.
    fn flux_y(&self, u: &State) -> Result<DVector<f64>>;

    /// Jacobian of the horizontal flux in conserved variables.
    fn jac_x(&self, u: &State) -> Result<DMatrix<f64>>;

    /// Jacobian of the vertical flux in conserved variables.
    fn jac_y(&self, u: &State) -> Result<DMatrix<f64>>;

    /// Entropy `eta(U)`.
    fn entropy(&self, u: &State) -> Result<f64>;

    /// Horizontal entropy flux `psi^x(U)`.
    fn entropy_flux_x(&self, u: &State) -> Result<f64>;

    /// Vertical entropy flux `psi^y(U)`.
    fn entropy_flux_y(&self, u: &State) -> Result<f64>;

    /// Entropy gradient `eta_U`, as a vector.
    fn entropy_grad(&self, u: &State) -> Result<DVector<f64>>;

    /// Entropy Hessian `eta_UU`.
    fn entropy_hessian(&self, u: &State) -> Result<DMatrix<f64>>;

    /// Background state the phase-space ball is centered on.
    fn background(&self) -> State;

    /// Phase-space ball radius.
    fn radius(&self) -> f64;

    /// Check the domain invariants of a state (finiteness, positivity, ...).
    fn validate(&self, u: &State) -> Result<()>;

    fn in_ball(&self, u: &State) -> bool {
        (&u.0 - &self.background().0).norm() <= self.radius() * (1.0 + 1e-9)
    }

    fn assert_in_ball(&self, u: &State) -> Result<()> {
        if self.in_ball(u) {
            Ok(())
        } else {
            Err(Error::OutOfBall(format!(
                "|U - background| = {:.3e} exceeds radius {:.3e}",
                (&u.0 - &self.background().0).norm(),
                self.radius()
            )))
        }
    }
}

/// Deterministic sample of states inside the phase-space ball (uniform in the
/// ball, seeded).
pub fn sample_ball(system: &dyn System, count: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = system.dim();
    let bg = system.background();
    let eps = system.radius();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let dir = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let n = dir.norm();
        if n < 1e-12 {
            continue;
        }
        let r: f64 = rng.random_range(0.0..1.0f64).powf(1.0 / m as f64);
        let state = State(&bg.0 + dir * (eps * r / n));
        if system.validate(&state).is_ok() {
            out.push(state);
        }
    }
    out
}

/// Max-norm residuals of the entropy compatibility relations
/// `psi^x_U = eta_U f^x_U` and `psi^y_U = eta_U f^y_U` at a state, with the
/// entropy-flux gradients taken by central differences of step `h`.
pub fn compatibility_residual(system: &dyn System, u: &State, h: f64) -> Result<(f64, f64)> {
    let eta_u = system.entropy_grad(u)?;
    let jx = system.jac_x(u)?;
    let jy = system.jac_y(u)?;
    let expect_x = jx.transpose() * &eta_u;
    let expect_y = jy.transpose() * &eta_u;
    let m = system.dim();
    let mut rx = 0.0f64;
    let mut ry = 0.0f64;
    for j in 0..m {
        let mut up = u.clone();
        let mut um = u.clone();
        up.0[j] += h;
        um.0[j] -= h;
        let gx = (system.entropy_flux_x(&up)? - system.entropy_flux_x(&um)?) / (2.0 * h);
        let gy = (system.entropy_flux_y(&up)? - system.entropy_flux_y(&um)?) / (2.0 * h);
        rx = rx.max((gx - expect_x[j]).abs());
        ry = ry.max((gy - expect_y[j]).abs());
    }
    Ok((rx, ry))
}

/// Smallest eigenvalue of the entropy Hessian at a state.
pub fn min_entropy_hessian_eigenvalue(system: &dyn System, u: &State) -> Result<f64> {
    let hess = system.entropy_hessian(u)?;
    Ok(linalg::symmetric_eigenvalues_sorted(&hess)[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euler() -> Euler {
        Euler::new(EulerParams {
            gamma: 1.4,
            m0: 2.0,
        })
        .unwrap()
    }

    #[test]
    fn euler_background_flux_values() {
        let sys = euler();
        let ub = sys.background();
        let fx = sys.flux_x(&ub).unwrap();
        let fy = sys.flux_y(&ub).unwrap();
        let expect_fx = [2.0, 2.0 * 2.0 + 1.0 / 1.4, 0.0, 9.0];
        for i in 0..4 {
            assert!((fx[i] - expect_fx[i]).abs() < 1e-12, "fx[{i}] = {}", fx[i]);
        }
        let expect_fy = [0.0, 0.0, 1.0 / 1.4, 0.0];
        for i in 0..4 {
            assert!((fy[i] - expect_fy[i]).abs() < 1e-12, "fy[{i}] = {}", fy[i]);
        }
    }

    #[test]
    fn euler_zero_velocity_flux() {
        let sys = euler();
        let u = State::from_slice(&[1.0, 0.0, 0.0, 1.0 / (1.4 * 0.4)]);
        let fx = sys.flux_x(&u).unwrap();
        assert_eq!(fx[0], 0.0);
        assert!((fx[1] - 1.0 / 1.4).abs() < 1e-14); // pressure only
        assert_eq!(fx[2], 0.0);
        assert_eq!(fx[3], 0.0);
    }

    #[test]
    fn euler_rejects_nonphysical_states() {
        let sys = euler();
        assert!(matches!(
            sys.flux_x(&State::from_slice(&[-1.0, 0.0, 0.0, 1.0])),
            Err(Error::Domain(_))
        ));
        // kinetic energy exceeds total energy -> negative internal energy
        assert!(matches!(
            sys.flux_x(&State::from_slice(&[1.0, 4.0, 0.0, 1.0])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn euler_jacobian_spectrum_at_background() {
        let sys = euler();
        let jx = sys.jac_x(&sys.background()).unwrap();
        let eigs = linalg::real_eigenvalues_sorted(&jx, 1e-10).unwrap();
        let expect = [1.0, 2.0, 2.0, 3.0];
        for (e, x) in eigs.iter().zip(expect) {
            assert!((e - x).abs() < 1e-12, "eig {e} vs {x}");
        }
        let det: f64 = eigs.iter().product();
        assert!((det - 12.0).abs() < 1e-10);
    }

    #[test]
    fn euler_jacobians_match_finite_differences() {
        let sys = euler();
        let h = 1e-5;
        for u in sample_ball(&sys, 10, 42) {
            let jx = sys.jac_x(&u).unwrap();
            let jy = sys.jac_y(&u).unwrap();
            let fd_x = linalg::fd_jacobian(|x| sys.flux_x(&State(x.clone())).unwrap(), &u.0, h);
            let fd_y = linalg::fd_jacobian(|x| sys.flux_y(&State(x.clone())).unwrap(), &u.0, h);
            assert!((jx - fd_x).norm() < 1e-6);
            assert!((jy - fd_y).norm() < 1e-6);
        }
    }

    #[test]
    fn euler_supersonic_x_spectrum_closed_form() {
        let sys = euler();
        // n = 0 slice of the ball
        for u in sample_ball(&sys, 20, 7) {
            let mut u = u;
            u.0[2] = 0.0;
            let prim = |u: &State| {
                let rho = u.0[0];
                let p = 0.4 * (u.0[3] - (u.0[1] * u.0[1] + u.0[2] * u.0[2]) / (2.0 * rho));
                (u.0[1] / rho, (1.4 * p / rho).sqrt())
            };
            let (vel, c) = prim(&u);
            let jx = sys.jac_x(&u).unwrap();
            let mut eigs = linalg::real_eigenvalues_sorted(&jx, 1e-10).unwrap();
            let mut expect = vec![vel - c, vel, vel, vel + c];
            expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
            eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (e, x) in eigs.iter().zip(expect) {
                assert!((e - x).abs() < 1e-10, "eig {e} vs {x}");
            }
        }
    }

    #[test]
    fn euler_entropy_triple_values() {
        let sys = euler();
        let ub = sys.background();
        let s = (1.0 / 0.4) * (1.0f64 / 1.4).ln();
        let eta = sys.entropy(&ub).unwrap();
        assert!((eta - (-s)).abs() < 1e-12);
        assert!((eta - 0.8412).abs() < 1e-4);
        assert!((sys.entropy_flux_x(&ub).unwrap() - (-2.0 * s)).abs() < 1e-12);
        // n = 0 kills the vertical entropy flux
        assert_eq!(sys.entropy_flux_y(&ub).unwrap(), 0.0);
    }

    #[test]
    fn entropy_compatibility_and_convexity_hold_in_ball() {
        for sys in [
            Box::new(euler()) as Box<dyn System>,
            Box::new(LinearSystem::new()) as Box<dyn System>,
        ] {
            for u in sample_ball(sys.as_ref(), 100, 11) {
                let (rx, ry) = compatibility_residual(sys.as_ref(), &u, 1e-5).unwrap();
                assert!(rx < 1e-6, "{}: psi_x residual {rx}", sys.name());
                assert!(ry < 1e-6, "{}: psi_y residual {ry}", sys.name());
                let min = min_entropy_hessian_eigenvalue(sys.as_ref(), &u).unwrap();
                assert!(min > 0.0, "{}: eta_UU min eigenvalue {min}", sys.name());
            }
        }
    }

    #[test]
    fn euler_entropy_derivatives_match_finite_differences() {
        let sys = euler();
        for u in sample_ball(&sys, 10, 3) {
            let grad = sys.entropy_grad(&u).unwrap();
            let hess = sys.entropy_hessian(&u).unwrap();
            let f = |x: &DVector<f64>| sys.entropy(&State(x.clone())).unwrap();
            for j in 0..4 {
                let d = linalg::directional_derivative(
                    f,
                    &u.0,
                    &DVector::from_fn(4, |i, _| if i == j { 1.0 } else { 0.0 }),
                    1e-6,
                );
                assert!((d - grad[j]).abs() < 1e-7);
            }
            let fd_hess = linalg::fd_hessian(f, &u.0, 1e-4);
            assert!((&hess - fd_hess).norm() < 1e-5);
        }
    }

    #[test]
    fn euler_parameter_validation() {
        assert!(Euler::new(EulerParams {
            gamma: 1.4,
            m0: 0.5
        })
        .is_err());
        assert!(Euler::new(EulerParams {
            gamma: 0.9,
            m0: 2.0
        })
        .is_err());
        assert!(Euler::new(EulerParams {
            gamma: 1.4,
            m0: -2.0
        })
        .is_ok());
    }

    #[test]
    fn linear_system_shape() {
        let sys = LinearSystem::new();
        let u = State::from_slice(&[0.1, -0.2, 0.3, 0.05]);
        let fx = sys.flux_x(&u).unwrap();
        assert_eq!(fx, u.0);
        let a = sys.jac_y(&u).unwrap();
        let eigs = linalg::real_eigenvalues_sorted(&a, 1e-12).unwrap();
        let expect = [-1.0, 0.3, 0.3, 1.0];
        for (e, x) in eigs.iter().zip(expect) {
            assert!((e - x).abs() < 1e-14);
        }
    }
}
