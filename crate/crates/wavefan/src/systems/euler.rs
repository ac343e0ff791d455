//! Full (non-isentropic) Euler equations for a polytropic ideal gas, in
//! nondimensional units with background density and sound speed equal to 1.
//!
//! Conserved variables are `U = (rho, m, n, rhoE)` with `m`, `n` the
//! horizontal and vertical momentum densities and
//! `rhoE = (m^2 + n^2)/(2 rho) + rho e`. The closure is
//! `p = (gamma - 1) rho e`, `c^2 = gamma p / rho`,
//! `S = ln(p / rho^gamma) / (gamma - 1)`, `T = p / rho`, which satisfies
//! `p_rho = c^2`, `e_rho = p / rho^2`, `e_S = T` with `(rho, S)` as the
//! independent thermodynamic pair.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::systems::{State, System};

/// Adiabatic exponent and background Mach number.
#[derive(Debug, Clone, Copy)]
pub struct EulerParams {
    pub gamma: f64,
    /// Background horizontal momentum; `|m0| > 1` keeps the steady problem
    /// hyperbolic (supersonic background).
    pub m0: f64,
}

/// Default phase-space ball radius.
const DEFAULT_RADIUS: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct Euler {
    params: EulerParams,
    background: DVector<f64>,
    radius: f64,
}

/// Primitive quantities derived from a conserved state.
struct Prim {
    rho: f64,
    mx: f64,
    my: f64,
    u: f64,
    v: f64,
    q2: f64,
    e: f64,
    p: f64,
    c2: f64,
    s: f64,
    /// Temperature T = p / rho.
    t: f64,
    /// p_S at fixed rho; equals (gamma - 1) p for a polytropic gas.
    p_s: f64,
}

impl Euler {
    pub fn new(params: EulerParams) -> Result<Self> {
        Self::with_radius(params, DEFAULT_RADIUS)
    }

    pub fn with_radius(params: EulerParams, radius: f64) -> Result<Self> {
        if !(params.gamma > 1.0) {
            return Err(Error::Config(format!(
                "gamma must exceed 1, got {}",
                params.gamma
            )));
        }
        if !(params.m0.abs() > 1.0) {
            return Err(Error::Config(format!(
                "background not supersonic: |M0| = {} <= 1",
                params.m0.abs()
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::Config("ball radius must be positive".into()));
        }
        let g = params.gamma;
        // rho = c = 1 => p = 1/gamma, rho e = 1/(gamma (gamma-1))
        let background = DVector::from_column_slice(&[
            1.0,
            params.m0,
            0.0,
            0.5 * params.m0 * params.m0 + 1.0 / (g * (g - 1.0)),
        ]);
        Ok(Euler {
            params,
            background,
            radius,
        })
    }

    pub fn params(&self) -> EulerParams {
        self.params
    }

    fn prim(&self, state: &State) -> Result<Prim> {
        let u = &state.0;
        if u.len() != 4 {
            return Err(Error::Domain(format!(
                "expected 4 components, got {}",
                u.len()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite state entry".into()));
        }
        let g = self.params.gamma;
        let rho = u[0];
        if rho <= 0.0 {
            return Err(Error::Domain(format!("nonpositive density {rho}")));
        }
        let mx = u[1];
        let my = u[2];
        let re = u[3];
        let vel_u = mx / rho;
        let vel_v = my / rho;
        let q2 = vel_u * vel_u + vel_v * vel_v;
        let e = (re - 0.5 * (mx * mx + my * my) / rho) / rho;
        if e <= 0.0 {
            return Err(Error::Domain(format!("nonpositive internal energy {e}")));
        }
        let p = (g - 1.0) * rho * e;
        let c2 = g * p / rho;
        let s = (p / rho.powf(g)).ln() / (g - 1.0);
        Ok(Prim {
            rho,
            mx,
            my,
            u: vel_u,
            v: vel_v,
            q2,
            e,
            p,
            c2,
            s,
            t: p / rho,
            p_s: (g - 1.0) * p,
        })
    }

    /// Flux Jacobian with respect to `W = (rho, m, n, S)`, horizontal
    /// direction.
    fn jac_w_x(p: &Prim) -> DMatrix<f64> {
        let (u, v, q2) = (p.u, p.v, p.q2);
        let common = 1.5 * u * u + 0.5 * v * v + p.e + p.p / p.rho;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0,
                1.0,
                0.0,
                0.0,
                p.c2 - u * u,
                2.0 * u,
                0.0,
                p.p_s,
                -u * v,
                v,
                u,
                0.0,
                u * (p.c2 - q2),
                common,
                u * v,
                p.mx * p.t + p.mx * p.p_s / p.rho,
            ],
        )
    }

    /// Flux Jacobian with respect to `W = (rho, m, n, S)`, vertical direction.
    fn jac_w_y(p: &Prim) -> DMatrix<f64> {
        let (u, v, q2) = (p.u, p.v, p.q2);
        let common = 1.5 * v * v + 0.5 * u * u + p.e + p.p / p.rho;
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0,
                0.0,
                1.0,
                0.0,
                -u * v,
                v,
                u,
                0.0,
                p.c2 - v * v,
                0.0,
                2.0 * v,
                p.p_s,
                v * (p.c2 - q2),
                u * v,
                common,
                p.my * p.t + p.my * p.p_s / p.rho,
            ],
        )
    }

    /// Jacobian of `W = (rho, m, n, S)` with respect to the conserved
    /// variables; only the entropy row is nontrivial.
    fn w_u(&self, p: &Prim) -> DMatrix<f64> {
        let g = self.params.gamma;
        let mut m = DMatrix::identity(4, 4);
        m[(3, 0)] = 0.5 * p.q2 / p.p - g / ((g - 1.0) * p.rho);
        m[(3, 1)] = -p.u / p.p;
        m[(3, 2)] = -p.v / p.p;
        m[(3, 3)] = 1.0 / p.p;
        m
    }

    /// Gradient of S with respect to the conserved variables.
    fn s_grad(&self, p: &Prim) -> DVector<f64> {
        let g = self.params.gamma;
        DVector::from_column_slice(&[
            0.5 * p.q2 / p.p - g / ((g - 1.0) * p.rho),
            -p.u / p.p,
            -p.v / p.p,
            1.0 / p.p,
        ])
    }

    /// Hessian of S with respect to the conserved variables.
    fn s_hessian(&self, p: &Prim) -> DMatrix<f64> {
        let g = self.params.gamma;
        // p_UU = (g-1) * M
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = -p.q2 / p.rho;
        m[(0, 1)] = p.u / p.rho;
        m[(1, 0)] = p.u / p.rho;
        m[(0, 2)] = p.v / p.rho;
        m[(2, 0)] = p.v / p.rho;
        m[(1, 1)] = -1.0 / p.rho;
        m[(2, 2)] = -1.0 / p.rho;
        // p_U = (g-1) * grad
        let grad = DVector::from_column_slice(&[0.5 * p.q2, -p.u, -p.v, 1.0]);
        let mut hess = m / p.p - (&grad * grad.transpose()) * ((g - 1.0) / (p.p * p.p));
        hess[(0, 0)] += g / ((g - 1.0) * p.rho * p.rho);
        hess
    }
}

impl System for Euler {
    fn dim(&self) -> usize {
        4
    }

    fn name(&self) -> &'static str {
        "euler"
    }

    fn flux_x(&self, state: &State) -> Result<DVector<f64>> {
        let p = self.prim(state)?;
        Ok(DVector::from_column_slice(&[
            p.mx,
            p.mx * p.u + p.p,
            p.mx * p.v,
            p.u * (state.0[3] + p.p),
        ]))
    }

    fn flux_y(&self, state: &State) -> Result<DVector<f64>> {
        let p = self.prim(state)?;
        Ok(DVector::from_column_slice(&[
            p.my,
            p.my * p.u,
            p.my * p.v + p.p,
            p.v * (state.0[3] + p.p),
        ]))
    }

    fn jac_x(&self, state: &State) -> Result<DMatrix<f64>> {
        let p = self.prim(state)?;
        Ok(Self::jac_w_x(&p) * self.w_u(&p))
    }

    fn jac_y(&self, state: &State) -> Result<DMatrix<f64>> {
        let p = self.prim(state)?;
        Ok(Self::jac_w_y(&p) * self.w_u(&p))
    }

    fn entropy(&self, state: &State) -> Result<f64> {
        let p = self.prim(state)?;
        Ok(-p.rho * p.s)
    }

    fn entropy_flux_x(&self, state: &State) -> Result<f64> {
        let p = self.prim(state)?;
        Ok(-p.mx * p.s)
    }

    fn entropy_flux_y(&self, state: &State) -> Result<f64> {
        let p = self.prim(state)?;
        Ok(-p.my * p.s)
    }

    fn entropy_grad(&self, state: &State) -> Result<DVector<f64>> {
        let p = self.prim(state)?;
        let sg = self.s_grad(&p);
        let mut grad = sg * (-p.rho);
        grad[0] -= p.s;
        Ok(grad)
    }

    fn entropy_hessian(&self, state: &State) -> Result<DMatrix<f64>> {
        let p = self.prim(state)?;
        let sg = self.s_grad(&p);
        let mut hess = self.s_hessian(&p) * (-p.rho);
        for j in 0..4 {
            hess[(0, j)] -= sg[j];
            hess[(j, 0)] -= sg[j];
        }
        Ok(hess)
    }

    fn background(&self) -> State {
        State(self.background.clone())
    }

    fn radius(&self) -> f64 {
        self.radius
    }

    fn validate(&self, u: &State) -> Result<()> {
        self.prim(u).map(|_| ())
    }
}
