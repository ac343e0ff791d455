//! Wave curves through a left state: shock Hugoniot loci, simple-wave
//! integral curves for genuinely nonlinear families, and p-dimensional
//! contact leaves for linearly degenerate families.
//!
//! Both genuinely nonlinear curves are parameterized by the linear strength
//! `sigma = l^a(Vbar) (V^+ - V^-)`, so the shock and simple-wave curves of a
//! family agree to second order in `sigma` pointwise, not just as sets.
//! Contact leaves are charted by ordered sequential integration along the
//! orthonormal eigenframe, one leg per coordinate of `s`.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::averaging::{self, entropy_jump, rh_residual};
use crate::error::{Error, Result};
use crate::pencil::{self, Analysis, FieldKind};
use crate::systems::State;

/// Fixed number of one-step stages per curve leg.
const LEG_STEPS: usize = 64;
/// Hugoniot Newton residual target.
const HUGONIOT_TOL: f64 = 1e-11;
/// Intermediate-state projection residual target.
const INTERMEDIATE_TOL: f64 = 1e-10;
/// Ball-exit slack for wave endpoints: curves are driven by V-space strengths
/// up to half the radius, whose preimages can leave the strict U-ball.
const BALL_SLACK: f64 = 2.0;

/// Which half-plane a fan lives on, in the sense of the forward-in-time
/// Riemann analogy. With a positive horizontal spectrum the forward side is
/// x > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Side {
    #[serde(rename = "forward")]
    Forward,
    #[serde(rename = "backward")]
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum WaveKind {
    #[serde(rename = "shock")]
    Shock,
    #[serde(rename = "simple")]
    Simple,
    #[serde(rename = "contact")]
    Contact,
}

/// Sampled integral curve of a simple wave, monotone in the eigenvalue.
#[derive(Debug, Clone)]
pub struct SimpleCurve {
    /// Strength parameter values, ascending from 0.
    pub ts: Vec<f64>,
    pub vs: Vec<DVector<f64>>,
    pub us: Vec<State>,
    pub lambdas: Vec<f64>,
}

/// A single wave: typed jump or fan between two states.
#[derive(Debug, Clone)]
pub struct Wave {
    pub family: usize,
    pub kind: WaveKind,
    pub ul: State,
    pub ur: State,
    pub vl: DVector<f64>,
    pub vr: DVector<f64>,
    pub xi_lo: f64,
    pub xi_hi: f64,
    /// Scalar strength for genuinely nonlinear waves, leaf coordinates for
    /// contacts.
    pub strength: Vec<f64>,
    /// Rankine–Hugoniot residual norm at construction (discontinuities).
    pub rh_norm: f64,
    /// Entropy jump at construction (discontinuities).
    pub entropy_jump: f64,
    pub curve: Option<SimpleCurve>,
}

impl Wave {
    pub fn is_discontinuity(&self) -> bool {
        self.xi_lo == self.xi_hi
    }
}

fn check_ball(analysis: &Analysis, u: &State) -> Result<()> {
    let sys = analysis.system;
    let dist = (&u.0 - &sys.background().0).norm();
    if dist <= BALL_SLACK * sys.radius() * (1.0 + 1e-9) {
        Ok(())
    } else {
        Err(Error::OutOfBall(format!(
            "wave endpoint {dist:.3e} from background exceeds {BALL_SLACK} x radius"
        )))
    }
}

/// Frame of family `family` at a V-space point, aligned to the background
/// frames. Returns the frame, the eigenvalue, and the recovered state for
/// seeding the next inversion.
fn frame_at(
    analysis: &Analysis,
    v: &DVector<f64>,
    seed: &State,
    family: usize,
) -> Result<(DMatrix<f64>, f64, State)> {
    let (es, u) = analysis.eigenstructure_v(v, seed)?;
    let g = &es.groups[family];
    Ok((g.right.clone(), g.lambda, u))
}

/// Classical fourth-order one-step integration of `dV/dt = field(V)` over
/// `[0, t_total]` with a fixed number of steps, recording the nodes.
fn rk4<F>(mut field: F, v0: DVector<f64>, t_total: f64, steps: usize) -> Result<Vec<DVector<f64>>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let h = t_total / steps as f64;
    let mut v = v0.clone();
    let mut nodes = Vec::with_capacity(steps + 1);
    nodes.push(v.clone());
    for _ in 0..steps {
        let k1 = field(&v)?;
        let k2 = field(&(&v + &k1 * (0.5 * h)))?;
        let k3 = field(&(&v + &k2 * (0.5 * h)))?;
        let k4 = field(&(&v + &k3 * h))?;
        v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        nodes.push(v.clone());
    }
    Ok(nodes)
}

/// One point of the Hugoniot locus of a genuinely nonlinear family through
/// `ul`, at strength `sigma = l^a(Vbar) (V^+ - V^-)`. Returns the right state
/// and the discontinuity speed.
pub fn hugoniot_point(
    analysis: &Analysis,
    ul: &State,
    family: usize,
    sigma: f64,
) -> Result<(State, f64)> {
    if analysis.kind(family) != FieldKind::GenuinelyNonlinear {
        return Err(Error::Classification(format!(
            "family {family} is not genuinely nonlinear; contacts have no Hugoniot branch"
        )));
    }
    let sys = analysis.system;
    let es = analysis.eigenstructure(ul)?;
    let lambda0 = es.lambda(family);
    if sigma == 0.0 {
        return Ok((ul.clone(), lambda0));
    }
    let m = sys.dim();
    let vl = pencil::to_v(sys, ul)?;
    let fl = sys.flux_y(ul)?;
    let r0: DVector<f64> = es.groups[family].right.column(0).into();
    let lbar: RowDVector<f64> = analysis.background.groups[family].left.row(0).into();

    let mut v = &vl + &r0 * sigma;
    let mut xi = lambda0;
    let mut seed = ul.clone();
    // iterate to the machine floor; the quadratic contraction constant grows
    // like 1/sigma, so an absolute mid-size gate would stop one step early
    // for weak shocks and leave an O(sigma^3) residual
    let floor = 1e-14 * (1.0 + fl.norm());
    let mut best: Option<(DVector<f64>, f64, f64)> = None;
    for _ in 0..50 {
        let u = pencil::from_v_seeded(sys, &v, &seed)?;
        let f = sys.flux_y(&u)?;
        let jump_v = &v - &vl;
        let mut g = DVector::zeros(m + 1);
        for i in 0..m {
            g[i] = f[i] - fl[i] - xi * jump_v[i];
        }
        g[m] = (&lbar * &jump_v)[(0, 0)] - sigma;
        let res = g.norm();
        if best.as_ref().map_or(true, |b| res < b.2) {
            best = Some((v.clone(), xi, res));
        }
        if res < floor {
            break;
        }
        let fv = pencil::fv_at(sys, &u)?;
        let mut jac = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..m {
                jac[(i, j)] = fv[(i, j)] - if i == j { xi } else { 0.0 };
            }
            jac[(i, m)] = -jump_v[i];
            jac[(m, i)] = lbar[i];
        }
        let step = jac
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::Solver("singular Hugoniot Newton system".into()))?;
        for i in 0..m {
            v[i] -= step[i];
        }
        xi -= step[m];
        seed = u;
    }
    let (v, xi, res) = best.unwrap();
    if res > HUGONIOT_TOL {
        return Err(Error::Solver(format!(
            "Hugoniot Newton stalled at residual {res:.3e} for family {family}, strength {sigma:.3e}"
        )));
    }
    let ur = pencil::from_v_seeded(sys, &v, &seed)?;
    check_ball(analysis, &ur)?;
    Ok((ur, xi))
}

/// Simple-wave endpoint and curve for a genuinely nonlinear family:
/// integrates the oriented eigenvector field, normalized so the curve
/// parameter equals the linear strength, over `[0, sigma]`.
pub fn simple_wave(
    analysis: &Analysis,
    ul: &State,
    family: usize,
    sigma: f64,
) -> Result<SimpleCurve> {
    if analysis.kind(family) != FieldKind::GenuinelyNonlinear {
        return Err(Error::Classification(format!(
            "family {family} is not genuinely nonlinear; it admits no simple waves"
        )));
    }
    if sigma < 0.0 {
        return Err(Error::Config(format!(
            "simple-wave strength must be nonnegative, got {sigma:.3e}"
        )));
    }
    let sys = analysis.system;
    let vl = pencil::to_v(sys, ul)?;
    let lbar: RowDVector<f64> = analysis.background.groups[family].left.row(0).into();
    let mut seed = ul.clone();
    let nodes = if sigma == 0.0 {
        vec![vl.clone()]
    } else {
        rk4(
            |v| {
                let (frame, _, u) = frame_at(analysis, v, &seed, family)?;
                let r: DVector<f64> = frame.column(0).into();
                let speed = (&lbar * &r)[(0, 0)];
                if speed.abs() < 0.5 {
                    return Err(Error::Frame(format!(
                        "strength normalization degenerated ({speed:.3e}) along family {family}"
                    )));
                }
                seed = u;
                Ok(r / speed)
            },
            vl,
            sigma,
            LEG_STEPS,
        )?
    };

    let mut ts = Vec::with_capacity(nodes.len());
    let mut us = Vec::with_capacity(nodes.len());
    let mut lambdas = Vec::with_capacity(nodes.len());
    let mut prev = ul.clone();
    for (k, v) in nodes.iter().enumerate() {
        let u = pencil::from_v_seeded(sys, v, &prev)?;
        let lambda = analysis.lambda_at(&u, family)?;
        ts.push(sigma * k as f64 / (nodes.len() - 1).max(1) as f64);
        lambdas.push(lambda);
        prev = u.clone();
        us.push(u);
    }
    for w in lambdas.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Classification(format!(
                "eigenvalue not strictly increasing along the simple wave: {} -> {}",
                w[0], w[1]
            )));
        }
    }
    check_ball(analysis, us.last().unwrap())?;
    Ok(SimpleCurve {
        ts,
        vs: nodes,
        us,
        lambdas,
    })
}

/// Chart of the contact leaf of a linearly degenerate family through a base
/// state: `s` in R^p maps to the point reached by integrating the frame
/// fields one coordinate at a time in a fixed order. The eigenvalue is
/// constant on the leaf and any two of its points satisfy the jump
/// conditions at that eigenvalue.
pub struct ContactLeaf<'a, 'b> {
    analysis: &'a Analysis<'b>,
    pub base: DVector<f64>,
    base_u: State,
    pub family: usize,
}

impl<'a, 'b> ContactLeaf<'a, 'b> {
    pub fn through(analysis: &'a Analysis<'b>, ul: &State, family: usize) -> Result<Self> {
        if analysis.kind(family) != FieldKind::LinearlyDegenerate {
            return Err(Error::Classification(format!(
                "family {family} is not linearly degenerate; it carries no contact leaf"
            )));
        }
        Ok(ContactLeaf {
            analysis,
            base: pencil::to_v(analysis.system, ul)?,
            base_u: ul.clone(),
            family,
        })
    }

    /// Chart point in V-space; `point(0) = base`.
    pub fn point(&self, s: &[f64]) -> Result<DVector<f64>> {
        contact_leaf_point_v(self.analysis, &self.base, &self.base_u, self.family, s)
    }

    /// Leaf coordinates of the state the projection solve associates to `v`.
    pub fn coordinates_of(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        intermediate_state(self.analysis, &self.base, v, self.family)
    }
}

/// Point of the contact leaf of a linearly degenerate family through `ul`,
/// reached by integrating the frame fields one coordinate of `s` at a time
/// in a fixed order.
pub fn contact_leaf_point(
    analysis: &Analysis,
    ul: &State,
    family: usize,
    s: &[f64],
) -> Result<State> {
    let v = contact_leaf_point_v(analysis, &pencil::to_v(analysis.system, ul)?, ul, family, s)?;
    let u = pencil::from_v_seeded(analysis.system, &v, ul)?;
    check_ball(analysis, &u)?;
    Ok(u)
}

/// V-space variant of [`contact_leaf_point`], with an explicit inversion
/// seed.
pub fn contact_leaf_point_v(
    analysis: &Analysis,
    vminus: &DVector<f64>,
    seed: &State,
    family: usize,
    s: &[f64],
) -> Result<DVector<f64>> {
    if analysis.kind(family) != FieldKind::LinearlyDegenerate {
        return Err(Error::Classification(format!(
            "family {family} is not linearly degenerate; it carries no contact leaf"
        )));
    }
    let p = analysis.mults[family];
    if s.len() != p {
        return Err(Error::Config(format!(
            "leaf coordinates have length {}, family multiplicity is {p}",
            s.len()
        )));
    }
    let mut v = vminus.clone();
    let mut seed = seed.clone();
    for (i, &leg) in s.iter().enumerate() {
        if leg == 0.0 {
            continue;
        }
        let nodes = rk4(
            |x| {
                let (frame, _, u) = frame_at(analysis, x, &seed, family)?;
                seed = u;
                Ok(frame.column(i).into())
            },
            v,
            leg,
            LEG_STEPS,
        )?;
        v = nodes.into_iter().next_back().unwrap();
    }
    Ok(v)
}

/// Rows of the background total projection that are most linearly
/// independent, chosen greedily; fixed once per family.
fn independent_rows(proj: &DMatrix<f64>, p: usize) -> Vec<usize> {
    let m = proj.nrows();
    let mut rows: Vec<DVector<f64>> = (0..m).map(|i| proj.row(i).transpose()).collect();
    let mut picked = Vec::with_capacity(p);
    for _ in 0..p {
        let (best, _) = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| !picked.contains(i))
            .map(|(i, r)| (i, r.norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        picked.push(best);
        let dir = rows[best].normalize();
        for (i, r) in rows.iter_mut().enumerate() {
            if !picked.contains(&i) {
                let coeff = r.dot(&dir);
                *r -= &dir * coeff;
            }
        }
    }
    picked.sort_unstable();
    picked
}

/// Leaf coordinates of the intermediate state: the unique `s` with
/// `P^a(W(V^-, s), V) (V - W(V^-, s)) = 0`, solved by Newton iteration on a
/// fixed set of p independent rows with the Jacobian frozen at the base
/// point.
pub fn intermediate_state(
    analysis: &Analysis,
    vminus: &DVector<f64>,
    v: &DVector<f64>,
    family: usize,
) -> Result<DVector<f64>> {
    if analysis.kind(family) != FieldKind::LinearlyDegenerate {
        return Err(Error::Classification(format!(
            "family {family} is not linearly degenerate"
        )));
    }
    let sys = analysis.system;
    let p = analysis.mults[family];
    let lambda_bar = analysis.background_lambda(family);
    let delta = analysis.contour_radius;

    let proj_bar = pencil::total_projection(
        &analysis.background.fv,
        lambda_bar,
        delta,
        pencil::CONTOUR_NODES,
    )?;
    let rows = independent_rows(&proj_bar, p);

    // frozen Jacobian: selected rows of the base-point frame, negated
    let base_seed = pencil::from_v(sys, vminus)?;
    let (frame0, _, _) = frame_at(analysis, vminus, &base_seed, family)?;
    let mut jac = DMatrix::zeros(p, p);
    for (k, &row) in rows.iter().enumerate() {
        for j in 0..p {
            jac[(k, j)] = -frame0[(row, j)];
        }
    }
    let jac_lu = jac.lu();

    let mut s = DVector::zeros(p);
    let mut last_res = f64::INFINITY;
    for _ in 0..50 {
        let w = contact_leaf_point_v(analysis, vminus, &base_seed, family, s.as_slice())?;
        let avg = averaging::harten_lax_average(sys, &w, v)?;
        let proj = pencil::total_projection(&avg.a_hat, lambda_bar, delta, pencil::CONTOUR_NODES)?;
        let full = proj * (v - &w);
        let mut res = DVector::zeros(p);
        for (k, &row) in rows.iter().enumerate() {
            res[k] = full[row];
        }
        last_res = res.norm();
        if last_res < INTERMEDIATE_TOL {
            return Ok(s);
        }
        let step = jac_lu
            .solve(&res)
            .ok_or_else(|| Error::Solver("projection Jacobian is singular".into()))?;
        s -= step;
    }
    Err(Error::Solver(format!(
        "intermediate-state projection stalled at residual {last_res:.3e}"
    )))
}

impl Wave {
    /// Admissible shock of a genuinely nonlinear family. Forward-side shocks
    /// dissipate entropy and satisfy the Lax inequalities
    /// `lambda(ur) < xi < lambda(ul)`; backward-side shocks reverse both.
    pub fn shock(
        analysis: &Analysis,
        side: Side,
        ul: &State,
        family: usize,
        sigma: f64,
    ) -> Result<Wave> {
        let (ur, xi) = hugoniot_point(analysis, ul, family, sigma)?;
        let sys = analysis.system;
        let rh = rh_residual(sys, ul, &ur, xi)?.norm();
        if rh > 1e-9 {
            return Err(Error::Solver(format!(
                "shock violates RH: residual {rh:.3e}"
            )));
        }
        let ej = entropy_jump(sys, ul, &ur, xi)?;
        let ll = analysis.lambda_at(ul, family)?;
        let lr = analysis.lambda_at(&ur, family)?;
        let lax_forward = lr < xi && xi < ll;
        let lax_backward = ll < xi && xi < lr;
        let (entropy_ok, lax_ok) = match side {
            Side::Forward => (ej <= 1e-14, lax_forward),
            Side::Backward => (ej >= -1e-14, lax_backward),
        };
        if !entropy_ok || !lax_ok {
            return Err(Error::Structure(format!(
                "inadmissible {side:?} shock: entropy jump {ej:.3e}, lambda {ll:.6e} / xi {xi:.6e} / {lr:.6e}"
            )));
        }
        Ok(Wave {
            family,
            kind: WaveKind::Shock,
            ul: ul.clone(),
            vl: pencil::to_v(sys, ul)?,
            vr: pencil::to_v(sys, &ur)?,
            ur,
            xi_lo: xi,
            xi_hi: xi,
            strength: vec![sigma],
            rh_norm: rh,
            entropy_jump: ej,
            curve: None,
        })
    }

    /// Simple wave of a genuinely nonlinear family, spanning
    /// `[lambda(ul), lambda(ur)]`.
    pub fn simple(analysis: &Analysis, ul: &State, family: usize, sigma: f64) -> Result<Wave> {
        let curve = simple_wave(analysis, ul, family, sigma)?;
        let ur = curve.us.last().unwrap().clone();
        Ok(Wave {
            family,
            kind: WaveKind::Simple,
            ul: ul.clone(),
            vl: curve.vs.first().unwrap().clone(),
            vr: curve.vs.last().unwrap().clone(),
            xi_lo: curve.lambdas[0],
            xi_hi: *curve.lambdas.last().unwrap(),
            ur,
            strength: vec![sigma],
            rh_norm: 0.0,
            entropy_jump: 0.0,
            curve: Some(curve),
        })
    }

    /// Contact discontinuity of a linearly degenerate family, with leaf
    /// coordinates `s`.
    pub fn contact(analysis: &Analysis, ul: &State, family: usize, s: &[f64]) -> Result<Wave> {
        let ur = contact_leaf_point(analysis, ul, family, s)?;
        let sys = analysis.system;
        let ll = analysis.lambda_at(ul, family)?;
        let lr = analysis.lambda_at(&ur, family)?;
        if (ll - lr).abs() > 1e-9 {
            return Err(Error::Structure(format!(
                "contact endpoints disagree on the eigenvalue: {ll:.12e} vs {lr:.12e}"
            )));
        }
        let xi = ll;
        let rh = rh_residual(sys, ul, &ur, xi)?.norm();
        if rh > 1e-9 {
            return Err(Error::Structure(format!(
                "contact violates RH: residual {rh:.3e}"
            )));
        }
        let ej = entropy_jump(sys, ul, &ur, xi)?;
        Ok(Wave {
            family,
            kind: WaveKind::Contact,
            ul: ul.clone(),
            vl: pencil::to_v(sys, ul)?,
            vr: pencil::to_v(sys, &ur)?,
            ur,
            xi_lo: xi,
            xi_hi: xi,
            strength: s.to_vec(),
            rh_norm: rh,
            entropy_jump: ej,
            curve: None,
        })
    }
}

/// Evaluate a point on a stored simple-wave curve at parameter `t` by
/// one-step integration from the nearest stored node at or below `t`.
pub fn curve_point(
    analysis: &Analysis,
    curve: &SimpleCurve,
    family: usize,
    t: f64,
) -> Result<DVector<f64>> {
    let n = curve.ts.len();
    debug_assert!(n >= 2);
    let sigma = *curve.ts.last().unwrap();
    let t = t.clamp(0.0, sigma);
    let idx = ((t / sigma) * (n - 1) as f64).floor() as usize;
    let idx = idx.min(n - 2);
    let dt = t - curve.ts[idx];
    if dt == 0.0 {
        return Ok(curve.vs[idx].clone());
    }
    let lbar: RowDVector<f64> = analysis.background.groups[family].left.row(0).into();
    let mut seed = curve.us[idx].clone();
    let nodes = rk4(
        |v| {
            let (frame, _, u) = frame_at(analysis, v, &seed, family)?;
            let r: DVector<f64> = frame.column(0).into();
            let speed = (&lbar * &r)[(0, 0)];
            seed = u;
            Ok(r / speed)
        },
        curve.vs[idx].clone(),
        dt,
        1,
    )?;
    Ok(nodes.into_iter().next_back().unwrap())
}
