//! Forward-sector Riemann solver and fan composition.
//!
//! The forward solve composes exactly one wave per family, left to right in
//! family order, and Newton-iterates on the stacked strength vector until
//! the composition endpoint matches the right state. Backward-sector
//! scenarios are composed explicitly, never solved: the theory provides
//! uniqueness only for the forward side.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pencil::{self, Analysis, FieldKind};
use crate::systems::State;
use crate::waves::{self, Side, Wave, WaveKind};

/// How the strength Newton builds its Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Forward differences of the composition map, rebuilt every iteration.
    #[default]
    ForwardDiff,
    /// The right-eigenvector matrix at the left state, frozen.
    Frozen,
}

/// Newton seed for the strength vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedMode {
    #[default]
    Zero,
    /// Left-eigenvector projection of the V-space jump.
    Linearized,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub jacobian: JacobianMode,
    pub seed: SeedMode,
    pub max_iters: usize,
    pub tol: f64,
    /// Strengths below this are treated as absent waves.
    pub strength_floor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            jacobian: JacobianMode::default(),
            seed: SeedMode::default(),
            max_iters: 50,
            tol: 1e-10,
            strength_floor: 1e-12,
        }
    }
}

/// An ordered fan of waves with the constant states between them.
#[derive(Debug, Clone)]
pub struct WaveFan {
    pub waves: Vec<Wave>,
    /// `waves.len() + 1` constant states, outermost first.
    pub states: Vec<State>,
    pub side: Side,
}

impl WaveFan {
    pub fn constant(ul: &State, side: Side) -> WaveFan {
        WaveFan {
            waves: Vec::new(),
            states: vec![ul.clone()],
            side,
        }
    }

    pub fn left_state(&self) -> &State {
        self.states.first().unwrap()
    }

    pub fn right_state(&self) -> &State {
        self.states.last().unwrap()
    }

    /// Abscissae of the discontinuities.
    pub fn jumps(&self) -> Vec<f64> {
        self.waves
            .iter()
            .filter(|w| w.is_discontinuity())
            .map(|w| w.xi_lo)
            .collect()
    }

    fn check_ordering(&self) -> Result<()> {
        for pair in self.waves.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.xi_lo < a.xi_hi - 1e-14 {
                return Err(Error::Composition(format!(
                    "wave supports overlap: [{:.6e}, {:.6e}] then [{:.6e}, {:.6e}]",
                    a.xi_lo, a.xi_hi, b.xi_lo, b.xi_hi
                )));
            }
            if a.is_discontinuity() && b.is_discontinuity() && b.xi_lo <= a.xi_hi + 1e-14 {
                return Err(Error::Composition(format!(
                    "discontinuities at {:.6e} and {:.6e} are not strictly separated",
                    a.xi_hi, b.xi_lo
                )));
            }
        }
        Ok(())
    }
}

/// Layout of the stacked strength vector: one scalar per genuinely nonlinear
/// family, one block of leaf coordinates per degenerate family.
fn strength_offsets(analysis: &Analysis) -> Vec<(usize, usize)> {
    let mut offsets = Vec::with_capacity(analysis.n_families());
    let mut at = 0;
    for f in 0..analysis.n_families() {
        let len = match analysis.kind(f) {
            FieldKind::GenuinelyNonlinear => 1,
            FieldKind::LinearlyDegenerate => analysis.mults[f],
        };
        offsets.push((at, len));
        at += len;
    }
    debug_assert_eq!(at, analysis.dim());
    offsets
}

/// Endpoint of the left-to-right composition of one wave per family with the
/// given stacked strengths.
pub fn apply_strengths(analysis: &Analysis, ul: &State, sigma: &DVector<f64>) -> Result<State> {
    propagate(analysis, ul, sigma, 0.0)
}

fn propagate(analysis: &Analysis, ul: &State, sigma: &DVector<f64>, floor: f64) -> Result<State> {
    let offsets = strength_offsets(analysis);
    let mut state = ul.clone();
    for (f, &(at, len)) in offsets.iter().enumerate() {
        let block = sigma.rows(at, len);
        if block.amax() <= floor {
            continue;
        }
        state = match analysis.kind(f) {
            FieldKind::GenuinelyNonlinear => {
                let s = block[0];
                if s > 0.0 {
                    waves::simple_wave(analysis, &state, f, s)?
                        .us
                        .into_iter()
                        .next_back()
                        .unwrap()
                } else {
                    waves::hugoniot_point(analysis, &state, f, s)?.0
                }
            }
            FieldKind::LinearlyDegenerate => {
                waves::contact_leaf_point(analysis, &state, f, block.as_slice())?
            }
        };
    }
    Ok(state)
}

/// Build the full fan for a converged strength vector.
fn assemble(
    analysis: &Analysis,
    ul: &State,
    sigma: &DVector<f64>,
    side: Side,
    floor: f64,
) -> Result<WaveFan> {
    let offsets = strength_offsets(analysis);
    let mut fan = WaveFan::constant(ul, side);
    let mut state = ul.clone();
    for (f, &(at, len)) in offsets.iter().enumerate() {
        let block = sigma.rows(at, len);
        if block.amax() <= floor {
            continue;
        }
        let wave = match analysis.kind(f) {
            FieldKind::GenuinelyNonlinear => {
                let s = block[0];
                if s > 0.0 {
                    Wave::simple(analysis, &state, f, s)?
                } else {
                    Wave::shock(analysis, side, &state, f, s)?
                }
            }
            FieldKind::LinearlyDegenerate => Wave::contact(analysis, &state, f, block.as_slice())?,
        };
        state = wave.ur.clone();
        fan.states.push(state.clone());
        fan.waves.push(wave);
    }
    fan.check_ordering()?;
    Ok(fan)
}

/// Solve the forward-sector Riemann problem: find the strength vector whose
/// left-to-right composition maps `ul` to `ur`.
pub fn solve_forward(analysis: &Analysis, ul: &State, ur: &State) -> Result<WaveFan> {
    solve_forward_with(analysis, ul, ur, &SolveOptions::default())
}

pub fn solve_forward_with(
    analysis: &Analysis,
    ul: &State,
    ur: &State,
    options: &SolveOptions,
) -> Result<WaveFan> {
    let sys = analysis.system;
    let m = sys.dim();
    let vr = pencil::to_v(sys, ur)?;
    let vl = pencil::to_v(sys, ul)?;

    let es_l = analysis.eigenstructure(ul)?;
    let right_l = es_l.stacked_right();
    let right_lu = right_l.clone().lu();

    let mut sigma: DVector<f64> = match options.seed {
        SeedMode::Zero => DVector::zeros(m),
        SeedMode::Linearized => right_lu
            .solve(&(&vr - &vl))
            .ok_or_else(|| Error::Solver("left-state eigenbasis is singular".into()))?,
    };

    let residual = |sigma: &DVector<f64>| -> Result<DVector<f64>> {
        let end = propagate(analysis, ul, sigma, options.strength_floor)?;
        Ok(pencil::to_v(sys, &end)? - &vr)
    };

    let mut phi = residual(&sigma)?;
    let mut converged = phi.norm() < options.tol;
    for _ in 0..options.max_iters {
        if converged {
            break;
        }
        let step = match options.jacobian {
            JacobianMode::Frozen => right_lu
                .solve(&phi)
                .ok_or_else(|| Error::Solver("left-state eigenbasis is singular".into()))?,
            JacobianMode::ForwardDiff => {
                let h = 1e-8;
                let mut jac = DMatrix::zeros(m, m);
                for j in 0..m {
                    let mut s = sigma.clone();
                    s[j] += h;
                    let col = (residual(&s)? - &phi) / h;
                    jac.set_column(j, &col);
                }
                jac.lu()
                    .solve(&phi)
                    .ok_or_else(|| Error::Solver("strength Jacobian is singular".into()))?
            }
        };
        sigma -= step;
        phi = residual(&sigma)?;
        converged = phi.norm() < options.tol;
    }
    if !converged {
        return Err(Error::Solver(format!(
            "strength Newton stalled at residual {:.3e}",
            phi.norm()
        )));
    }
    assemble(analysis, ul, &sigma, Side::Forward, options.strength_floor)
}

/// Strengths of a solved fan as a stacked vector (absent waves are zero).
pub fn stacked_strengths(analysis: &Analysis, fan: &WaveFan) -> DVector<f64> {
    let offsets = strength_offsets(analysis);
    let mut sigma = DVector::zeros(analysis.dim());
    for w in &fan.waves {
        let (at, len) = offsets[w.family];
        for k in 0..len.min(w.strength.len()) {
            sigma[at + k] = w.strength[k];
        }
    }
    sigma
}

/// One wave request for [`compose_fan`].
#[derive(Debug, Clone)]
pub struct WaveSpec {
    pub family: usize,
    pub kind: WaveKind,
    pub strength: Vec<f64>,
}

/// Compose an explicit sequence of admissible waves left to right. Supports
/// backward-sector scenarios with several waves per family; consecutive
/// simple waves of one family are structurally forbidden.
pub fn compose_fan(
    analysis: &Analysis,
    ul: &State,
    spec: &[WaveSpec],
    side: Side,
) -> Result<WaveFan> {
    for pair in spec.windows(2) {
        if pair[0].family == pair[1].family
            && pair[0].kind == WaveKind::Simple
            && pair[1].kind == WaveKind::Simple
        {
            return Err(Error::Structure(format!(
                "consecutive simple waves in family {}",
                pair[0].family
            )));
        }
    }
    let mut fan = WaveFan::constant(ul, side);
    let mut state = ul.clone();
    for ws in spec {
        let wave = match ws.kind {
            WaveKind::Shock => {
                if ws.strength.len() != 1 {
                    return Err(Error::Config("shock strength must be a scalar".into()));
                }
                Wave::shock(analysis, side, &state, ws.family, ws.strength[0])?
            }
            WaveKind::Simple => {
                if ws.strength.len() != 1 {
                    return Err(Error::Config(
                        "simple-wave strength must be a scalar".into(),
                    ));
                }
                Wave::simple(analysis, &state, ws.family, ws.strength[0])?
            }
            WaveKind::Contact => Wave::contact(analysis, &state, ws.family, &ws.strength)?,
        };
        state = wave.ur.clone();
        fan.states.push(state.clone());
        fan.waves.push(wave);
    }
    fan.check_ordering()?;
    Ok(fan)
}

/// Evaluate the fan at the given sorted abscissae. At a discontinuity's
/// exact abscissa the left state is returned.
pub fn sample_profile(
    analysis: &Analysis,
    fan: &WaveFan,
    grid: &[f64],
) -> Result<Vec<(f64, State)>> {
    let mut out = Vec::with_capacity(grid.len());
    for &xi in grid {
        out.push((xi, state_at(analysis, fan, xi)?));
    }
    Ok(out)
}

/// State of the fan at one ray. Left-state convention at jump abscissae.
pub fn state_at(analysis: &Analysis, fan: &WaveFan, xi: f64) -> Result<State> {
    let mut state = fan.states[0].clone();
    for (k, w) in fan.waves.iter().enumerate() {
        if xi <= w.xi_lo {
            return Ok(state);
        }
        if xi < w.xi_hi {
            // strictly inside a simple-wave fan
            return fan_interior(analysis, w, xi);
        }
        state = fan.states[k + 1].clone();
    }
    Ok(state)
}

/// Invert `lambda(V(t)) = xi` on a stored simple-wave curve.
fn fan_interior(analysis: &Analysis, wave: &Wave, xi: f64) -> Result<State> {
    let curve = wave
        .curve
        .as_ref()
        .ok_or_else(|| Error::Structure("fan interior of a discontinuity".into()))?;
    // bracket by binary search on the monotone eigenvalue samples
    let mut lo = 0;
    let mut hi = curve.lambdas.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if curve.lambdas[mid] <= xi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (l_lo, l_hi) = (curve.lambdas[lo], curve.lambdas[hi]);
    let (t_lo, t_hi) = (curve.ts[lo], curve.ts[hi]);
    let mut t = t_lo + (xi - l_lo) / (l_hi - l_lo) * (t_hi - t_lo);
    let mut seed = curve.us[lo].clone();
    // a couple of secant corrections after the interpolated guess
    let mut t_prev = t_lo;
    let mut g_prev = l_lo - xi;
    for _ in 0..60 {
        let v = waves::curve_point(analysis, curve, wave.family, t)?;
        let u = pencil::from_v_seeded(analysis.system, &v, &seed)?;
        let g = analysis.lambda_at(&u, wave.family)? - xi;
        seed = u;
        if g.abs() < 1e-14 * xi.abs().max(1.0) {
            break;
        }
        let dg = g - g_prev;
        let t_next = if dg.abs() > 1e-300 {
            t - g * (t - t_prev) / dg
        } else {
            t
        };
        t_prev = t;
        g_prev = g;
        t = t_next.clamp(t_lo, t_hi);
        if (t - t_prev).abs() < 1e-16 {
            break;
        }
    }
    let v = waves::curve_point(analysis, curve, wave.family, t)?;
    pencil::from_v_seeded(analysis.system, &v, &seed)
}
