//! Averaged matrices and jump residuals.
//!
//! Two averages of the flux Jacobian `f_V` between states are provided: the
//! straight-path average, and the entropy-symmetrized (Harten–Lax) average
//! built from a straight path in entropy variables `w = sign * e_V^T`. The
//! latter is a product of a symmetric matrix and an SPD inverse, hence real
//! diagonalizable, which is what the repeated-eigenvalue theory needs. Both
//! satisfy the averaging identity `A_hat [V] = [f]` up to quadrature error
//! and reduce to `f_V` when the two states coincide.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::pencil::{self, Analysis};
use crate::systems::{sample_ball, State, System};

/// Gauss–Legendre node count for all path integrals.
pub const GAUSS_NODES: usize = 16;

/// Reduced entropy pair for the flux `f(V) = f^y(U(V))`:
/// `e(V) = psi^x(U(V))`, `q(V) = psi^y(U(V))`.
pub struct ReducedEntropy<'a> {
    system: &'a dyn System,
    /// +1 when e is convex, -1 when concave (then -e is the usable entropy).
    pub sign: f64,
}

impl<'a> ReducedEntropy<'a> {
    pub fn new(system: &'a dyn System) -> Result<Self> {
        Ok(ReducedEntropy {
            system,
            sign: convexity_sign(system)?,
        })
    }

    pub fn e(&self, v: &DVector<f64>) -> Result<f64> {
        self.system.entropy_flux_x(&pencil::from_v(self.system, v)?)
    }

    pub fn q(&self, v: &DVector<f64>) -> Result<f64> {
        self.system.entropy_flux_y(&pencil::from_v(self.system, v)?)
    }

    pub fn f(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.system.flux_y(&pencil::from_v(self.system, v)?)
    }

    /// Gradient `e_V`, which equals the entropy gradient `eta_U` at the
    /// preimage state.
    pub fn e_grad(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.system.entropy_grad(&pencil::from_v(self.system, v)?)
    }

    /// Hessian `e_VV = eta_UU (f_U^x)^{-1}` at the preimage state,
    /// symmetrized to remove rounding noise.
    pub fn e_hessian(&self, v: &DVector<f64>) -> Result<DMatrix<f64>> {
        e_hessian_at(self.system, &pencil::from_v(self.system, v)?)
    }
}

fn e_hessian_at(system: &dyn System, u: &State) -> Result<DMatrix<f64>> {
    let eta_uu = system.entropy_hessian(u)?;
    let jx = system.jac_x(u)?;
    let x = jx
        .transpose()
        .lu()
        .solve(&eta_uu.transpose())
        .ok_or_else(|| Error::Hyperbolicity("singular horizontal Jacobian".into()))?;
    let h = x.transpose();
    Ok((&h + h.transpose()) * 0.5)
}

/// Sign of the horizontal spectrum: +1 when all eigenvalues of `f_U^x` at the
/// background are positive (forward sectors lie in x > 0), -1 when all are
/// negative (forward sectors lie in x < 0).
fn convexity_sign(system: &dyn System) -> Result<f64> {
    let jx = system.jac_x(&system.background())?;
    let eigs = linalg::real_eigenvalues_sorted(&jx, 1e-9)?;
    if eigs.iter().all(|&l| l > 0.0) {
        Ok(1.0)
    } else if eigs.iter().all(|&l| l < 0.0) {
        Ok(-1.0)
    } else {
        Err(Error::MixedSignature(format!(
            "horizontal spectrum {eigs:?} has mixed signs; no convex reduced entropy exists"
        )))
    }
}

/// Convexity sign of the reduced entropy, verified against a
/// finite-difference Hessian of `e` at ten ball states.
pub fn e_convexity(system: &dyn System) -> Result<f64> {
    let sign = convexity_sign(system)?;
    // e is smooth past the ball, so the Hessian step need not shrink with it
    let h = 1e-4;
    for u in sample_ball(system, 10, 1601) {
        let v = pencil::to_v(system, &u)?;
        let seed = u.clone();
        let e = |x: &DVector<f64>| -> f64 {
            let uu = pencil::from_v_seeded(system, x, &seed).expect("inversion near ball");
            system.entropy_flux_x(&uu).expect("entropy flux")
        };
        let hess = linalg::fd_hessian(e, &v, h) * sign;
        let min = linalg::symmetric_eigenvalues_sorted(&hess)[0];
        if min <= 0.0 {
            return Err(Error::Convexity(format!(
                "sign-adjusted reduced entropy Hessian has eigenvalue {min:.3e} <= 0"
            )));
        }
    }
    Ok(sign)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AverageMethod {
    Naive,
    HartenLax,
}

/// An averaged matrix between two states of V-space.
#[derive(Debug, Clone)]
pub struct AveragedMatrix {
    pub a_hat: DMatrix<f64>,
    pub vl: DVector<f64>,
    pub vr: DVector<f64>,
    pub method: AverageMethod,
    /// Harten–Lax factors (symmetric and SPD): `a_hat = s1 * s2^{-1}`.
    pub s1: Option<DMatrix<f64>>,
    pub s2: Option<DMatrix<f64>>,
}

impl AveragedMatrix {
    /// Eigenvalues sorted ascending; the spectrum is real for the
    /// Harten–Lax average.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::real_eigenvalues_sorted(&self.a_hat, 1e-9)
    }

    /// Eigenvalues bucketed by the background family they stay close to.
    /// Fails if an eigenvalue strays further than the contour radius from
    /// every background eigenvalue, or a bucket has the wrong size.
    pub fn grouped_eigenvalues(&self, analysis: &Analysis) -> Result<Vec<Vec<f64>>> {
        let eigs = self.eigenvalues()?;
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); analysis.n_families()];
        for l in eigs {
            let (family, dist) = (0..analysis.n_families())
                .map(|f| (f, (l - analysis.background_lambda(f)).abs()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            if dist > analysis.contour_radius {
                return Err(Error::Hyperbolicity(format!(
                    "averaged eigenvalue {l:.6e} is {dist:.3e} from every background family"
                )));
            }
            buckets[family].push(l);
        }
        for (f, b) in buckets.iter().enumerate() {
            if b.len() != analysis.mults[f] {
                return Err(Error::Hyperbolicity(format!(
                    "family {f} captured {} averaged eigenvalues, expected {}",
                    b.len(),
                    analysis.mults[f]
                )));
            }
        }
        Ok(buckets)
    }

    /// Condition number of a stacked basis of group eigenspaces, one
    /// orthonormal block per family. Values much above 1 indicate the group
    /// eigenspaces are nearly parallel.
    pub fn eigen_condition(&self, analysis: &Analysis) -> Result<f64> {
        let m = self.a_hat.nrows();
        let buckets = self.grouped_eigenvalues(analysis)?;
        let mut stacked = DMatrix::zeros(m, m);
        let mut col = 0;
        for bucket in &buckets {
            let p = bucket.len();
            let center = bucket.iter().sum::<f64>() / p as f64;
            let shifted = &self.a_hat - DMatrix::identity(m, m) * center;
            let (basis, _) = linalg::nullspace_basis(&shifted, p);
            stacked.view_mut((0, col), (m, p)).copy_from(&basis);
            col += p;
        }
        let svd = stacked.svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        Ok(smax / smin.max(1e-300))
    }
}

/// Straight-path average `int_0^1 f_V(V^- + s (V^+ - V^-)) ds` by
/// Gauss–Legendre quadrature. Not guaranteed diagonalizable when the pencil
/// has repeated eigenvalues.
pub fn naive_average(
    system: &dyn System,
    vl: &DVector<f64>,
    vr: &DVector<f64>,
) -> Result<AveragedMatrix> {
    let m = system.dim();
    let (nodes, weights) = linalg::gauss_legendre_01(GAUSS_NODES);
    let mut a = DMatrix::zeros(m, m);
    let mut seed = pencil::from_v(system, vl)?;
    for (&s, &w) in nodes.iter().zip(&weights) {
        let v = vl + (vr - vl) * s;
        let u = pencil::from_v_seeded(system, &v, &seed)?;
        a += pencil::fv_at(system, &u)? * w;
        seed = u;
    }
    Ok(AveragedMatrix {
        a_hat: a,
        vl: vl.clone(),
        vr: vr.clone(),
        method: AverageMethod::Naive,
        s1: None,
        s2: None,
    })
}

/// Entropy-symmetrized average along the straight path in entropy variables
/// `w(V) = sign * e_V(V)^T`. Writing `S1 = int f_V V_w` and `S2 = int V_w`
/// over the path, the average is `S1 S2^{-1}` with `S1` symmetric and `S2`
/// SPD, hence real diagonalizable.
pub fn harten_lax_average(
    system: &dyn System,
    vl: &DVector<f64>,
    vr: &DVector<f64>,
) -> Result<AveragedMatrix> {
    let m = system.dim();
    let sign = convexity_sign(system)?;
    let ul = pencil::from_v(system, vl)?;
    let ur = pencil::from_v_seeded(system, vr, &ul)?;
    let wl = system.entropy_grad(&ul)? * sign;
    let wr = system.entropy_grad(&ur)? * sign;

    let (nodes, weights) = linalg::gauss_legendre_01(GAUSS_NODES);
    let mut s1 = DMatrix::zeros(m, m);
    let mut s2 = DMatrix::zeros(m, m);
    let mut u = ul.clone();
    for (&theta, &wq) in nodes.iter().zip(&weights) {
        let w_target = &wl + (&wr - &wl) * theta;
        u = invert_entropy_variables(system, sign, &w_target, &u)?;
        let w_v = e_hessian_at(system, &u)? * sign;
        let v_w = w_v.clone().lu().try_inverse().ok_or_else(|| {
            Error::Convexity("entropy-variable Jacobian singular on the path".into())
        })?;
        let v_w = (&v_w + v_w.transpose()) * 0.5;
        let fv = pencil::fv_at(system, &u)?;
        s1 += &fv * &v_w * wq;
        s2 += v_w * wq;
    }
    // S2 must be SPD for the construction to stand
    let min_eig = linalg::symmetric_eigenvalues_sorted(&s2)[0];
    if min_eig <= 0.0 {
        return Err(Error::Convexity(format!(
            "path integral of V_w is not positive definite (min eigenvalue {min_eig:.3e})"
        )));
    }
    let s2_inv = s2
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Convexity("S2 is singular".into()))?;
    Ok(AveragedMatrix {
        a_hat: &s1 * s2_inv,
        vl: vl.clone(),
        vr: vr.clone(),
        method: AverageMethod::HartenLax,
        s1: Some(s1),
        s2: Some(s2),
    })
}

/// Solve `sign * eta_U(U) = w` for the state U by Newton iteration with the
/// SPD Jacobian `sign * eta_UU`.
fn invert_entropy_variables(
    system: &dyn System,
    sign: f64,
    w: &DVector<f64>,
    seed: &State,
) -> Result<State> {
    let scale = w.norm().max(1.0);
    let mut u = seed.clone();
    for _ in 0..50 {
        let g = system
            .entropy_grad(&u)
            .map_err(|e| Error::OutOfBall(format!("entropy path left the domain: {e}")))?
            * sign
            - w;
        if g.norm() <= 1e-13 * scale {
            return Ok(u);
        }
        let jac = system.entropy_hessian(&u)? * sign;
        let step = jac
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::Convexity("entropy Hessian singular on the path".into()))?;
        u.0 -= step;
    }
    Err(Error::OutOfBall(
        "entropy-variable inversion did not converge".into(),
    ))
}

/// Rankine–Hugoniot residual `[f(V)] - xi [V]`, evaluated directly from the
/// physical fluxes: `(f^y(U^+) - f^y(U^-)) - xi (f^x(U^+) - f^x(U^-))`.
pub fn rh_residual(system: &dyn System, ul: &State, ur: &State, xi: f64) -> Result<DVector<f64>> {
    let jump_f = system.flux_y(ur)? - system.flux_y(ul)?;
    let jump_v = system.flux_x(ur)? - system.flux_x(ul)?;
    Ok(jump_f - jump_v * xi)
}

/// Entropy jump `[q] - xi [e]`. Admissible discontinuities have a
/// nonpositive jump on the x > 0 side and a nonnegative jump on the x < 0
/// side.
pub fn entropy_jump(system: &dyn System, ul: &State, ur: &State, xi: f64) -> Result<f64> {
    let jump_q = system.entropy_flux_y(ur)? - system.entropy_flux_y(ul)?;
    let jump_e = system.entropy_flux_x(ur)? - system.entropy_flux_x(ul)?;
    Ok(jump_q - xi * jump_e)
}
