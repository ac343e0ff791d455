//! Generalized eigenstructure of the flux pencil `(f_U^x, f_U^y)`.
//!
//! After the change of dependent variables `V = f^x(U)` the generalized
//! eigenvalues of the pencil become the ordinary eigenvalues of
//! `f_V = f_U^y (f_U^x)^{-1}`. Eigenvalues are grouped by their constant
//! multiplicities, each group carries an orthonormal right frame and dual
//! left rows, and fields are classified as genuinely nonlinear or linearly
//! degenerate. Total spectral projections are evaluated by trapezoidal
//! quadrature of the resolvent contour integral.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::systems::{State, System};

/// Newton iteration cap for inverting `V = f^x(U)`.
const NEWTON_MAX_ITERS: usize = 50;
/// Relative residual target for the inversion.
const FROM_V_TOL: f64 = 1e-14;
/// Relative tolerance on imaginary parts of pencil eigenvalues.
const TOL_IMAG: f64 = 1e-9;
/// Step for eigenvalue directional derivatives in V-space.
const H_CLASSIFY: f64 = 1e-6;
/// A field whose eigenvalue gradient stays below this along its frame is
/// linearly degenerate.
pub const TOL_LD: f64 = 1e-8;
/// A simple field whose eigenvalue gradient stays above this with one sign is
/// genuinely nonlinear.
const TOL_GNL_FLOOR: f64 = 1e-6;
/// Default node count for the resolvent contour quadrature.
pub const CONTOUR_NODES: usize = 64;
/// Frames whose subspace overlap with the reference drops below cos(pi/4)
/// indicate the ball is too large for a global smooth frame.
const FRAME_MIN_QUALITY: f64 = FRAC_1_SQRT_2;

/// Change of variables `U -> V = f^x(U)`.
pub fn to_v(system: &dyn System, u: &State) -> Result<DVector<f64>> {
    system.flux_x(u)
}

/// Invert `f^x(U) = V` by Newton iteration seeded at the background state.
pub fn from_v(system: &dyn System, v: &DVector<f64>) -> Result<State> {
    from_v_seeded(system, v, &system.background())
}

/// Invert `f^x(U) = V` by Newton iteration from a caller-provided seed.
pub fn from_v_seeded(system: &dyn System, v: &DVector<f64>, seed: &State) -> Result<State> {
    let scale = v.norm().max(1.0);
    let mut u = seed.clone();
    for _ in 0..NEWTON_MAX_ITERS {
        let fx = system
            .flux_x(&u)
            .map_err(|e| Error::OutOfBall(format!("flux inversion left the domain: {e}")))?;
        let r = v - fx;
        if r.norm() <= FROM_V_TOL * scale {
            return Ok(u);
        }
        let jac = system
            .jac_x(&u)
            .map_err(|e| Error::OutOfBall(format!("flux inversion left the domain: {e}")))?;
        let step = jac
            .lu()
            .solve(&r)
            .ok_or_else(|| Error::OutOfBall("singular horizontal Jacobian in inversion".into()))?;
        u.0 += step;
    }
    Err(Error::OutOfBall(format!(
        "inversion of V = f^x(U) did not converge in {NEWTON_MAX_ITERS} iterations"
    )))
}

/// The matrix `f_V = f_U^y (f_U^x)^{-1}` at a state.
pub fn fv_at(system: &dyn System, u: &State) -> Result<DMatrix<f64>> {
    let jx = system.jac_x(u)?;
    let jy = system.jac_y(u)?;
    // f_V^T solves (f_U^x)^T X = (f_U^y)^T
    let xt = jx
        .transpose()
        .lu()
        .solve(&jy.transpose())
        .ok_or_else(|| Error::Hyperbolicity("singular horizontal Jacobian".into()))?;
    Ok(xt.transpose())
}

/// Smallest rotation angle from the grid `{+-k pi/(4m)}` for which the
/// rotated horizontal Jacobian `cos(t) f_U^x - sin(t) f_U^y` is comfortably
/// nonsingular. Returns 0 when no rotation is needed.
pub fn rotation_angle(ax: &DMatrix<f64>, ay: &DMatrix<f64>) -> Result<f64> {
    let m = ax.nrows();
    let scale = (ax.norm().powi(2) + ay.norm().powi(2)).sqrt().max(1e-300);
    let tol = 1e-10;
    let admissible = |theta: f64| {
        let rotated = ax * theta.cos() - ay * theta.sin();
        rotated.determinant().abs() > tol * scale.powi(m as i32)
    };
    if admissible(0.0) {
        return Ok(0.0);
    }
    let step = PI / (4.0 * m as f64);
    for k in 1..(4 * m) {
        for sign in [1.0, -1.0] {
            let theta = sign * k as f64 * step;
            if admissible(theta) {
                return Ok(theta);
            }
        }
    }
    Err(Error::Hyperbolicity(
        "no rotation on the grid makes the pencil regular".into(),
    ))
}

/// Rotation check for a system at its background state.
pub fn char_poly_root_check(system: &dyn System) -> Result<f64> {
    let bg = system.background();
    rotation_angle(&system.jac_x(&bg)?, &system.jac_y(&bg)?)
}

/// Eigenvalue multiplicities at the background state, ascending by
/// eigenvalue.
pub fn background_multiplicities(system: &dyn System) -> Result<Vec<usize>> {
    let fv = fv_at(system, &system.background())?;
    let eigs = linalg::real_eigenvalues_sorted(&fv, TOL_IMAG)?;
    let split = 1e-6 * fv.norm().max(1.0);
    let mut mults = vec![1usize];
    for w in eigs.windows(2) {
        if w[1] - w[0] <= split {
            *mults.last_mut().unwrap() += 1;
        } else {
            mults.push(1);
        }
    }
    Ok(mults)
}

/// Whether a characteristic field is genuinely nonlinear or linearly
/// degenerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum FieldKind {
    #[serde(rename = "gnl")]
    GenuinelyNonlinear,
    #[serde(rename = "ld")]
    LinearlyDegenerate,
}

/// One eigenvalue group: a distinct eigenvalue with its multiplicity, an
/// orthonormal right frame, and the dual left rows.
#[derive(Debug, Clone)]
pub struct EigenGroup {
    pub lambda: f64,
    /// m x p matrix with orthonormal columns spanning the eigenspace.
    pub right: DMatrix<f64>,
    /// p x m dual rows; `left * right` of any two groups gives identity
    /// blocks or zero.
    pub left: DMatrix<f64>,
}

impl EigenGroup {
    pub fn mult(&self) -> usize {
        self.right.ncols()
    }

    /// Spectral projector `right * left` onto this group's eigenspace.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.right * &self.left
    }
}

/// Eigenstructure of `f_V` at one state: groups sorted ascending by
/// eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenStructure {
    pub groups: Vec<EigenGroup>,
    pub fv: DMatrix<f64>,
}

impl EigenStructure {
    /// Decompose a matrix whose spectrum is real and clusters into the given
    /// multiplicities. `grouping_tol` bounds the spread inside a cluster and
    /// must stay below the gap between clusters.
    pub fn compute(fv: DMatrix<f64>, mults: &[usize], grouping_tol: f64) -> Result<Self> {
        let m = fv.nrows();
        if mults.iter().sum::<usize>() != m {
            return Err(Error::Hyperbolicity(format!(
                "multiplicities {:?} do not sum to the dimension {m}",
                mults
            )));
        }
        let eigs = linalg::real_eigenvalues_sorted(&fv, TOL_IMAG)?;
        let mut centers = Vec::with_capacity(mults.len());
        let mut idx = 0;
        for &p in mults {
            let block = &eigs[idx..idx + p];
            let spread = block[p - 1] - block[0];
            if spread > grouping_tol {
                return Err(Error::Hyperbolicity(format!(
                    "cluster spread {spread:.3e} exceeds grouping tolerance {grouping_tol:.3e}; \
                     multiplicities not constant"
                )));
            }
            centers.push(block.iter().sum::<f64>() / p as f64);
            idx += p;
        }
        for w in centers.windows(2) {
            if w[1] - w[0] <= grouping_tol {
                return Err(Error::Hyperbolicity(format!(
                    "eigenvalue groups {:.6e} and {:.6e} are not separated",
                    w[0], w[1]
                )));
            }
        }

        let mut groups = Vec::with_capacity(mults.len());
        let mut stacked = DMatrix::zeros(m, m);
        let mut col = 0;
        for (&p, &lambda) in mults.iter().zip(&centers) {
            let shifted = &fv - DMatrix::identity(m, m) * lambda;
            let (mut basis, residual) = linalg::nullspace_basis(&shifted, p);
            if residual > 1e-7 * fv.norm().max(1.0) {
                return Err(Error::Hyperbolicity(format!(
                    "eigenspace of {lambda:.6e} is defective (kernel residual {residual:.3e})"
                )));
            }
            canonicalize_signs(&mut basis);
            stacked.view_mut((0, col), (m, p)).copy_from(&basis);
            col += p;
            groups.push(EigenGroup {
                lambda,
                right: basis,
                left: DMatrix::zeros(p, m),
            });
        }
        let inv = stacked
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Hyperbolicity("right eigenvector matrix is singular".into()))?;
        let mut row = 0;
        for g in &mut groups {
            let p = g.mult();
            g.left = inv.rows(row, p).into();
            row += p;
        }
        Ok(EigenStructure { groups, fv })
    }

    pub fn dim(&self) -> usize {
        self.fv.nrows()
    }

    pub fn n_families(&self) -> usize {
        self.groups.len()
    }

    pub fn lambda(&self, family: usize) -> f64 {
        self.groups[family].lambda
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.mult()).collect()
    }

    /// All right frames stacked as an m x m matrix, families in order.
    pub fn stacked_right(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut out = DMatrix::zeros(m, m);
        let mut col = 0;
        for g in &self.groups {
            out.view_mut((0, col), (m, g.mult())).copy_from(&g.right);
            col += g.mult();
        }
        out
    }

    /// Rotate every group frame within its span to best match `reference`,
    /// then rebuild the left rows. Fails when some subspace has tilted more
    /// than pi/4 away from the reference.
    pub fn align_to(&mut self, reference: &EigenStructure) -> Result<()> {
        let m = self.dim();
        let mut stacked = DMatrix::zeros(m, m);
        let mut col = 0;
        for (g, rg) in self.groups.iter_mut().zip(&reference.groups) {
            let (aligned, quality) = linalg::procrustes_align(&g.right, &rg.right);
            if quality < FRAME_MIN_QUALITY {
                return Err(Error::Frame(format!(
                    "eigenframe of family at {:.6e} overlaps reference only {:.3} < cos(pi/4)",
                    g.lambda, quality
                )));
            }
            g.right = aligned;
            stacked
                .view_mut((0, col), (m, g.mult()))
                .copy_from(&g.right);
            col += g.mult();
        }
        let inv = stacked
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Frame("aligned eigenvector matrix is singular".into()))?;
        let mut row = 0;
        for g in &mut self.groups {
            let p = g.mult();
            g.left = inv.rows(row, p).into();
            row += p;
        }
        Ok(())
    }
}

/// Make the dominant entry of each column positive, for reproducible frames.
fn canonicalize_signs(basis: &mut DMatrix<f64>) {
    for mut col in basis.column_iter_mut() {
        let mut dominant = 0;
        let mut best = 0.0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                dominant = i;
            }
        }
        if col[dominant] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Total spectral projection of `a` onto the eigenvalue group enclosed by the
/// circle `|z - center| = radius`, by trapezoidal quadrature of the resolvent
/// with `nodes` points. Fails when an eigenvalue sits within
/// `radius * 1e-3` of the contour.
pub fn total_projection(
    a: &DMatrix<f64>,
    center: f64,
    radius: f64,
    nodes: usize,
) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    for z in linalg::complex_eigenvalues(a)? {
        let dist = ((z.re - center).powi(2) + z.im.powi(2)).sqrt();
        if (dist - radius).abs() < radius * 1e-3 {
            return Err(Error::Contour(format!(
                "eigenvalue {:.6e}+{:.2e}i lies within {:.1e} of the contour |z - {center:.6e}| = {radius:.3e}",
                z.re,
                z.im,
                radius * 1e-3
            )));
        }
    }
    let ac = a.map(Complex::from);
    let mut sum = DMatrix::<Complex<f64>>::zeros(m, m);
    for k in 0..nodes {
        let theta = 2.0 * PI * k as f64 / nodes as f64;
        let phase = Complex::from_polar(1.0, theta);
        let z = Complex::from(center) + phase * radius;
        let shifted = DMatrix::<Complex<f64>>::identity(m, m) * z - &ac;
        let resolvent = shifted
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Contour("resolvent singular at a quadrature node".into()))?;
        sum += resolvent * phase;
    }
    Ok(sum.map(|z| z.re * radius / nodes as f64))
}

/// Eigenvalue of the group nearest `lambda_ref` at a perturbed point,
/// averaged over the group's multiplicity.
fn lambda_near(fv: &DMatrix<f64>, lambda_ref: f64, mult: usize) -> Result<f64> {
    let mut eigs = linalg::real_eigenvalues_sorted(fv, TOL_IMAG)?;
    eigs.sort_by(|a, b| {
        (a - lambda_ref)
            .abs()
            .partial_cmp(&(b - lambda_ref).abs())
            .unwrap()
    });
    Ok(eigs[..mult].iter().sum::<f64>() / mult as f64)
}

/// Background analysis of a system: multiplicities, reference frames,
/// field classification, and the contour radius separating the groups.
pub struct Analysis<'a> {
    pub system: &'a dyn System,
    pub mults: Vec<usize>,
    pub background_v: DVector<f64>,
    /// Eigenstructure at the background state, genuinely nonlinear frames
    /// oriented so the eigenvalue increases along them.
    pub background: EigenStructure,
    pub kinds: Vec<FieldKind>,
    /// Minimal gap between distinct background eigenvalues.
    pub min_gap: f64,
    /// Clusters tighter than this are one group.
    pub grouping_tol: f64,
    /// Resolvent contour radius: half the minimal gap.
    pub contour_radius: f64,
}

impl<'a> Analysis<'a> {
    pub fn new(system: &'a dyn System) -> Result<Self> {
        let bg = system.background();
        let theta = char_poly_root_check(system)?;
        if theta != 0.0 {
            return Err(Error::Config(format!(
                "pencil requires a coordinate rotation of {theta:.6} rad; rotate the system first"
            )));
        }
        let mults = background_multiplicities(system)?;
        let fv = fv_at(system, &bg)?;
        let eigs = linalg::real_eigenvalues_sorted(&fv, TOL_IMAG)?;
        // distinct eigenvalue estimates for the gap
        let mut centers = Vec::new();
        let mut idx = 0;
        for &p in &mults {
            centers.push(eigs[idx..idx + p].iter().sum::<f64>() / p as f64);
            idx += p;
        }
        if centers.len() < 2 {
            return Err(Error::Hyperbolicity(
                "single eigenvalue group; pencil carries no wave structure".into(),
            ));
        }
        let min_gap = centers
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let grouping_tol = min_gap / 4.0;
        let mut background = EigenStructure::compute(fv, &mults, grouping_tol)?;

        let mut analysis = Analysis {
            system,
            mults: mults.clone(),
            background_v: to_v(system, &bg)?,
            background: EigenStructure {
                groups: Vec::new(),
                fv: DMatrix::zeros(0, 0),
            },
            kinds: Vec::new(),
            min_gap,
            grouping_tol,
            contour_radius: min_gap / 2.0,
        };

        // classify against the raw background frames, then bake in the
        // genuinely nonlinear orientation
        let mut kinds = Vec::with_capacity(mults.len());
        for family in 0..mults.len() {
            let (kind, sign) = analysis.classify_against(&background, family)?;
            if kind == FieldKind::GenuinelyNonlinear && sign < 0.0 {
                background.groups[family].right.neg_mut();
                background.groups[family].left.neg_mut();
            }
            kinds.push(kind);
        }
        analysis.background = background;
        analysis.kinds = kinds;
        Ok(analysis)
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn n_families(&self) -> usize {
        self.mults.len()
    }

    pub fn kind(&self, family: usize) -> FieldKind {
        self.kinds[family]
    }

    pub fn background_lambda(&self, family: usize) -> f64 {
        self.background.lambda(family)
    }

    /// Eigenstructure at a state, frames aligned to the background frames.
    pub fn eigenstructure(&self, u: &State) -> Result<EigenStructure> {
        let fv = fv_at(self.system, u)?;
        let mut es = EigenStructure::compute(fv, &self.mults, self.grouping_tol)?;
        es.align_to(&self.background)?;
        Ok(es)
    }

    /// Eigenstructure at a point of V-space; the inversion Newton is seeded
    /// at `seed` (pass the background state when nothing closer is known).
    /// Also returns the recovered conserved state.
    pub fn eigenstructure_v(
        &self,
        v: &DVector<f64>,
        seed: &State,
    ) -> Result<(EigenStructure, State)> {
        let u = from_v_seeded(self.system, v, seed)?;
        Ok((self.eigenstructure(&u)?, u))
    }

    /// All distinct eigenvalues at a state, ascending.
    pub fn lambdas(&self, u: &State) -> Result<Vec<f64>> {
        let fv = fv_at(self.system, u)?;
        let eigs = linalg::real_eigenvalues_sorted(&fv, TOL_IMAG)?;
        let mut out = Vec::with_capacity(self.mults.len());
        let mut idx = 0;
        for &p in &self.mults {
            out.push(eigs[idx..idx + p].iter().sum::<f64>() / p as f64);
            idx += p;
        }
        Ok(out)
    }

    pub fn lambda_at(&self, u: &State, family: usize) -> Result<f64> {
        Ok(self.lambdas(u)?[family])
    }

    /// Classify one family by sampling the eigenvalue gradient along the
    /// family frame at five points across the ball. Returns the kind and the
    /// common gradient sign (meaningful for genuinely nonlinear fields).
    fn classify_against(
        &self,
        reference: &EigenStructure,
        family: usize,
    ) -> Result<(FieldKind, f64)> {
        let sys = self.system;
        let bg = sys.background();
        let eps = sys.radius();
        let m = sys.dim();
        let p = self.mults[family];

        let mut samples = vec![bg.clone()];
        for axis in 0..2.min(m) {
            for sign in [1.0, -1.0] {
                let mut u = bg.clone();
                u.0[axis] += sign * 0.5 * eps;
                if sys.validate(&u).is_ok() {
                    samples.push(u);
                }
            }
        }

        let mut derivs = Vec::new();
        for u in &samples {
            let fv = fv_at(sys, u)?;
            let mut es = EigenStructure::compute(fv, &self.mults, self.grouping_tol)?;
            es.align_to(reference)?;
            let v = to_v(sys, u)?;
            let lambda_ref = es.lambda(family);
            for i in 0..p {
                let dir: DVector<f64> = es.groups[family].right.column(i).into();
                let sample = |sgn: f64| -> Result<f64> {
                    let vp = &v + &dir * (sgn * H_CLASSIFY);
                    let up = from_v_seeded(sys, &vp, u)?;
                    lambda_near(&fv_at(sys, &up)?, lambda_ref, p)
                };
                let d = (sample(1.0)? - sample(-1.0)?) / (2.0 * H_CLASSIFY);
                derivs.push(d);
            }
        }

        let max_abs = derivs.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        if max_abs < TOL_LD {
            return Ok((FieldKind::LinearlyDegenerate, 0.0));
        }
        if p >= 2 {
            return Err(Error::Classification(format!(
                "family {family} has multiplicity {p} but eigenvalue gradient {max_abs:.3e}; \
                 a repeated family must be linearly degenerate"
            )));
        }
        let min_abs = derivs.iter().fold(f64::INFINITY, |a, d| a.min(d.abs()));
        let all_pos = derivs.iter().all(|d| *d > 0.0);
        let all_neg = derivs.iter().all(|d| *d < 0.0);
        if min_abs > TOL_GNL_FLOOR && (all_pos || all_neg) {
            Ok((
                FieldKind::GenuinelyNonlinear,
                if all_pos { 1.0 } else { -1.0 },
            ))
        } else {
            Err(Error::Classification(format!(
                "family {family}: eigenvalue gradient in [{min_abs:.3e}, {max_abs:.3e}] with \
                 inconsistent signs; neither genuinely nonlinear nor linearly degenerate"
            )))
        }
    }

    /// Public classification entry point for one family.
    pub fn classify(&self, family: usize) -> FieldKind {
        self.kinds[family]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{sample_ball, Euler, EulerParams, LinearSystem};

    fn euler() -> Euler {
        Euler::new(EulerParams {
            gamma: 1.4,
            m0: 2.0,
        })
        .unwrap()
    }

    fn euler_lambda_closed_form(u: &State) -> (f64, f64, f64) {
        // acoustic and shear eigenvalues for gamma = 1.4
        let rho = u.0[0];
        let mx = u.0[1];
        let my = u.0[2];
        let p = 0.4 * (u.0[3] - (mx * mx + my * my) / (2.0 * rho));
        let c2 = 1.4 * p / rho;
        let rc2 = rho * rho * c2;
        let disc = (mx * mx + my * my - rc2).sqrt() * (rc2).sqrt();
        let denom = mx * mx - rc2;
        ((mx * my - disc) / denom, my / mx, (mx * my + disc) / denom)
    }

    #[test]
    fn change_of_variables_roundtrip() {
        let sys = euler();
        let vbar = to_v(&sys, &sys.background()).unwrap();
        let expect = [2.0, 2.0 * 2.0 + 1.0 / 1.4, 0.0, 9.0];
        for i in 0..4 {
            assert!((vbar[i] - expect[i]).abs() < 1e-12);
        }
        for u in sample_ball(&sys, 100, 9) {
            let v = to_v(&sys, &u).unwrap();
            let back = from_v(&sys, &v).unwrap();
            assert!((&back.0 - &u.0).norm() < 1e-12);
        }
        // identity change of variables for the linear fixture
        let lin = LinearSystem::new();
        let u = State::from_slice(&[0.2, -0.1, 0.4, 0.0]);
        assert_eq!(to_v(&lin, &u).unwrap(), u.0);
    }

    #[test]
    fn rotation_angle_cases() {
        assert_eq!(char_poly_root_check(&euler()).unwrap(), 0.0);
        assert_eq!(char_poly_root_check(&LinearSystem::new()).unwrap(), 0.0);
        // singular horizontal Jacobian, regular pencil after rotating
        let ax = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let ay = DMatrix::identity(2, 2);
        let theta = rotation_angle(&ax, &ay).unwrap();
        assert!(theta != 0.0);
        assert!((theta.abs() - PI / 8.0).abs() < 1e-14);
        let rotated = &ax * theta.cos() - &ay * theta.sin();
        assert!(rotated.determinant().abs() > 1e-3);
    }

    #[test]
    fn euler_background_eigenstructure() {
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        assert_eq!(analysis.mults, vec![1, 2, 1]);
        let s3 = 3.0f64.sqrt() / 3.0;
        assert!((analysis.background_lambda(0) + s3).abs() < 1e-12);
        assert!(analysis.background_lambda(1).abs() < 1e-12);
        assert!((analysis.background_lambda(2) - s3).abs() < 1e-12);
    }

    #[test]
    fn euler_eigenvalues_match_closed_forms_in_ball() {
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        for u in sample_ball(&sys, 50, 21) {
            let l = analysis.lambdas(&u).unwrap();
            let (lm, l0, lp) = euler_lambda_closed_form(&u);
            assert!((l[0] - lm).abs() < 1e-10, "{} vs {}", l[0], lm);
            assert!((l[1] - l0).abs() < 1e-10);
            assert!((l[2] - lp).abs() < 1e-10);
        }
    }

    #[test]
    fn biorthonormality_and_eigen_residuals() {
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        for u in sample_ball(&sys, 20, 33) {
            let es = analysis.eigenstructure(&u).unwrap();
            let m = es.dim();
            // left-right duality across all groups
            let mut left = DMatrix::zeros(m, m);
            let mut row = 0;
            for g in &es.groups {
                left.view_mut((row, 0), (g.mult(), m)).copy_from(&g.left);
                row += g.mult();
            }
            let prod = &left * es.stacked_right();
            assert!((prod - DMatrix::identity(m, m)).norm() < 1e-10);
            for g in &es.groups {
                // unit, orthonormal right frames with small eigen residual
                let gram = g.right.transpose() * &g.right;
                assert!((gram - DMatrix::identity(g.mult(), g.mult())).norm() < 1e-12);
                let res = (&es.fv - DMatrix::identity(m, m) * g.lambda) * &g.right;
                assert!(res.norm() < 1e-10, "eigen residual {}", res.norm());
            }
        }
    }

    #[test]
    fn generalized_eigenvector_residual() {
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        for u in sample_ball(&sys, 10, 5) {
            let es = analysis.eigenstructure(&u).unwrap();
            let jx = sys.jac_x(&u).unwrap();
            let jy = sys.jac_y(&u).unwrap();
            let jx_lu = jx.clone().lu();
            for g in &es.groups {
                for i in 0..g.mult() {
                    let r: DVector<f64> = g.right.column(i).into();
                    let s = jx_lu.solve(&r).unwrap();
                    let res = (&jy - &jx * g.lambda) * s;
                    assert!(res.norm() < 1e-9, "pencil residual {}", res.norm());
                }
            }
        }
    }

    #[test]
    fn linear_system_eigenstructure() {
        let sys = LinearSystem::new();
        let analysis = Analysis::new(&sys).unwrap();
        assert_eq!(analysis.mults, vec![1, 2, 1]);
        let expect = [-1.0, 0.3, 1.0];
        for (f, l) in expect.iter().enumerate() {
            assert!((analysis.background_lambda(f) - l).abs() < 1e-12);
            assert_eq!(analysis.kind(f), FieldKind::LinearlyDegenerate);
        }
    }

    #[test]
    fn euler_classification() {
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        assert_eq!(analysis.kind(0), FieldKind::GenuinelyNonlinear);
        assert_eq!(analysis.kind(1), FieldKind::LinearlyDegenerate);
        assert_eq!(analysis.kind(2), FieldKind::GenuinelyNonlinear);
    }

    #[test]
    fn gnl_frames_oriented_upward() {
        // after orientation the eigenvalue grows along every acoustic frame
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        let bg = sys.background();
        let v = to_v(&sys, &bg).unwrap();
        for family in [0usize, 2] {
            let r: DVector<f64> = analysis.background.groups[family].right.column(0).into();
            let h = 1e-6;
            let lam = |v: &DVector<f64>| -> f64 {
                let u = from_v(&sys, v).unwrap();
                analysis.lambda_at(&u, family).unwrap()
            };
            let d = (lam(&(&v + &r * h)) - lam(&(&v - &r * h))) / (2.0 * h);
            assert!(d > 1e-3, "family {family} slope {d}");
        }
    }

    #[test]
    fn shear_and_entropy_eigenvectors_span_expected_plane() {
        // the repeated family's frame spans the images of (0, m, n, 0) and
        // (-p_S, 0, 0, c^2) in W = (rho, m, n, S) variables
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        let u = sys.background();
        let g = 1.4f64;
        let (rho, mx, my) = (u.0[0], u.0[1], u.0[2]);
        let p = (g - 1.0) * (u.0[3] - (mx * mx + my * my) / (2.0 * rho));
        let e = p / ((g - 1.0) * rho);
        let q2 = (mx * mx + my * my) / (rho * rho);
        let (c2, p_s, t) = (g * p / rho, (g - 1.0) * p, p / rho);
        // dU/dW: only the energy row is nontrivial
        let mut u_w = DMatrix::identity(4, 4);
        u_w[(3, 0)] = -0.5 * q2 + e + p / rho;
        u_w[(3, 1)] = mx / rho;
        u_w[(3, 2)] = my / rho;
        u_w[(3, 3)] = rho * t;
        let jx = sys.jac_x(&u).unwrap();
        let w1 = DVector::from_column_slice(&[0.0, mx, my, 0.0]);
        let w2 = DVector::from_column_slice(&[-p_s, 0.0, 0.0, c2]);
        let v1 = &jx * &u_w * w1;
        let v2 = &jx * &u_w * w2;
        let es = analysis.eigenstructure(&u).unwrap();
        let proj = es.groups[1].projector();
        for v in [v1, v2] {
            let out_of_plane = (&v - &proj * &v).norm() / v.norm();
            assert!(
                out_of_plane < 1e-9,
                "component off the plane: {out_of_plane}"
            );
        }
    }

    #[test]
    fn total_projection_diagonal_oracle() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 2.0, 3.0]));
        let p = total_projection(&a, 2.0, 0.5, CONTOUR_NODES).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_column_slice(&[0.0, 1.0, 1.0, 0.0]));
        assert!((p - expect).norm() < 1e-12);
    }

    #[test]
    fn total_projection_properties_for_euler() {
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        let a = analysis.background.fv.clone();
        let m = a.nrows();
        let delta = analysis.contour_radius;
        let mut sum = DMatrix::zeros(m, m);
        let mut projs = Vec::new();
        for f in 0..analysis.n_families() {
            let p =
                total_projection(&a, analysis.background_lambda(f), delta, CONTOUR_NODES).unwrap();
            assert!((&p * &p - &p).norm() < 1e-9, "not idempotent");
            assert!((&p * &a - &a * &p).norm() < 1e-9, "does not commute");
            sum += &p;
            projs.push(p);
        }
        assert!((sum - DMatrix::identity(m, m)).norm() < 1e-9);
        // pairwise products vanish
        assert!((&projs[0] * &projs[1]).norm() < 1e-9);
        assert!((&projs[1] * &projs[2]).norm() < 1e-9);
        // the repeated group has rank 2
        assert!((projs[1].trace() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn total_projection_rejects_eigenvalue_on_contour() {
        let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0, 2.0, 3.0]));
        assert!(matches!(
            total_projection(&a, 2.0, 1.0, CONTOUR_NODES),
            Err(Error::Contour(_))
        ));
    }

    #[test]
    fn eigenvalue_continuity_along_path() {
        let sys = euler();
        let analysis = Analysis::new(&sys).unwrap();
        let bg = sys.background();
        let eps = sys.radius();
        let dir = DVector::from_column_slice(&[0.4, -0.3, 0.6, 0.2]).normalize();
        let steps = 200;
        let mut prev = analysis.lambdas(&bg).unwrap();
        let mut max_jump = 0.0f64;
        for k in 1..=steps {
            let t = k as f64 / steps as f64;
            let u = State(&bg.0 + &dir * (eps * (2.0 * PI * t).sin()));
            let l = analysis.lambdas(&u).unwrap();
            for (a, b) in l.iter().zip(&prev) {
                max_jump = max_jump.max((a - b).abs());
            }
            prev = l;
        }
        // Lipschitz-sized steps: path speed ~ 2 pi eps / steps, gradients O(1)
        let bound = 10.0 * 2.0 * PI * eps / steps as f64;
        assert!(max_jump < bound, "jump {max_jump} exceeds bound {bound}");
    }
}
