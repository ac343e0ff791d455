//! Verification of structure and regularity on sampled profiles: sector
//! constancy, wave classification and per-sector count rules, weak-form and
//! entropy residuals, and the decomposition into a jump part plus a
//! Lipschitz part.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use nalgebra::DVector;

use crate::averaging::{self, harten_lax_average};
use crate::error::{Error, Result};
use crate::pencil::{self, Analysis, FieldKind};
use crate::profile::Profile;
use crate::systems::sample_ball;
use crate::waves::{self, Side};

/// Verifier tolerances. Defaults match the acceptance thresholds; every
/// field can be overridden from the run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    /// Maximum oscillation allowed outside the sectors.
    pub tol_const: f64,
    /// Fan membership tolerance for `|lambda(U(xi)) - xi|`.
    pub tol_fan: f64,
    /// Absolute floor of the jump-detection threshold.
    pub tau_jump_floor: f64,
    /// Multiplier on (cell width x smooth difference quotient).
    pub tau_jump_factor: f64,
    /// Weak-form residual threshold.
    pub tol_weak: f64,
    /// Entropy-violation threshold.
    pub tol_entropy: f64,
    /// Leaf-membership reconstruction threshold for contacts.
    pub tol_leaf: f64,
    /// Eigenvalue continuity across a contact.
    pub tol_lambda_cont: f64,
    /// Number of random pairs for the weak form.
    pub weak_pairs: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            tol_const: 1e-9,
            tol_fan: 1e-6,
            tau_jump_floor: 1e-7,
            tau_jump_factor: 10.0,
            tol_weak: 1e-6,
            tol_entropy: 1e-6,
            tol_leaf: 1e-7,
            tol_lambda_cont: 1e-8,
            weak_pairs: 200,
            seed: 0,
        }
    }
}

/// Thin intervals around the background eigenvalues; all waves live inside
/// them and the profile is constant outside.
#[derive(Debug, Clone, Serialize)]
pub struct SectorMap {
    pub delta_s: f64,
    /// One `(lo, hi)` interval per family, ascending.
    pub intervals: Vec<(f64, f64)>,
    pub lambdas: Vec<f64>,
    pub kinds: Vec<FieldKind>,
    pub side: Side,
}

impl SectorMap {
    pub fn family_of(&self, xi: f64) -> Option<usize> {
        self.intervals
            .iter()
            .position(|&(lo, hi)| xi > lo && xi < hi)
    }

    pub fn outside_all(&self, xi: f64) -> bool {
        self.family_of(xi).is_none()
    }
}

/// Sector half-width: twice the eigenvalue spread over a deterministic
/// 100-state sample of the ball with an absolute floor, clamped below half
/// the minimal inter-family gap.
pub fn sector_map(analysis: &Analysis, side: Side) -> Result<SectorMap> {
    let bg_lambdas: Vec<f64> = (0..analysis.n_families())
        .map(|f| analysis.background_lambda(f))
        .collect();
    let mut spread = 0.0f64;
    for u in sample_ball(analysis.system, 100, 2203) {
        let l = analysis.lambdas(&u)?;
        for (a, b) in l.iter().zip(&bg_lambdas) {
            spread = spread.max((a - b).abs());
        }
    }
    let floor = 1e-5 * analysis.min_gap;
    if 2.0 * spread >= 0.499 * analysis.min_gap {
        return Err(Error::Config(format!(
            "ball too large: eigenvalue spread {spread:.3e} cannot be separated by gap {:.3e}",
            analysis.min_gap
        )));
    }
    let delta_s = (2.0 * spread).max(floor);
    Ok(SectorMap {
        delta_s,
        intervals: bg_lambdas
            .iter()
            .map(|l| (l - delta_s, l + delta_s))
            .collect(),
        lambdas: bg_lambdas,
        kinds: analysis.kinds.clone(),
        side,
    })
}

/// Sampling grid covering every sector with uniform points plus margins,
/// coarse connectors between sectors, and far-field flanks.
pub fn build_grid(sectors: &SectorMap, points_per_sector: usize, margin: f64) -> Vec<f64> {
    let n = sectors.intervals.len();
    let coarse = (points_per_sector / 16).max(8);
    // extend each sector, clipping at midpoints so the pieces stay disjoint
    let mut extended = Vec::with_capacity(n);
    for (k, &(lo, hi)) in sectors.intervals.iter().enumerate() {
        let w = hi - lo;
        let mut elo = lo - margin * w;
        let mut ehi = hi + margin * w;
        if k > 0 {
            let mid = 0.5 * (sectors.lambdas[k - 1] + sectors.lambdas[k]);
            elo = elo.max(mid + 0.25 * (sectors.lambdas[k] - mid));
        }
        if k + 1 < n {
            let mid = 0.5 * (sectors.lambdas[k] + sectors.lambdas[k + 1]);
            ehi = ehi.min(mid - 0.25 * (mid - sectors.lambdas[k]));
        }
        extended.push((elo, ehi));
    }
    let mut xs = Vec::new();
    // endpoints are emitted exactly so that adjacent pieces share their seam
    // and dedup removes it
    let linspace = |xs: &mut Vec<f64>, a: f64, b: f64, count: usize| {
        xs.push(a);
        for i in 1..count {
            xs.push(a + (b - a) * i as f64 / count as f64);
        }
        xs.push(b);
    };
    let flank = (extended[n - 1].1 - extended[0].0).max(1.0) * 0.25;
    linspace(&mut xs, extended[0].0 - flank, extended[0].0, coarse);
    for k in 0..n {
        linspace(&mut xs, extended[k].0, extended[k].1, points_per_sector);
        if k + 1 < n {
            linspace(&mut xs, extended[k].1, extended[k + 1].0, coarse);
        }
    }
    linspace(
        &mut xs,
        extended[n - 1].1,
        extended[n - 1].1 + flank,
        coarse,
    );
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    xs
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectedKind {
    #[serde(rename = "shock")]
    Shock,
    #[serde(rename = "contact")]
    Contact,
    #[serde(rename = "fan")]
    Fan,
    #[serde(rename = "unmatched")]
    Unmatched,
}

/// One wave found in a sampled profile.
#[derive(Debug, Clone, Serialize)]
pub struct DetectedWave {
    pub kind: DetectedKind,
    pub family: Option<usize>,
    pub xi_lo: f64,
    pub xi_hi: f64,
    /// Row range `[row_lo, row_hi]` in the profile.
    pub row_lo: usize,
    pub row_hi: usize,
    pub strength: Vec<f64>,
    pub rh_norm: f64,
    pub entropy_jump: f64,
    /// For contacts: distance of the right state from the leaf through the
    /// left state.
    pub leaf_residual: Option<f64>,
    /// For contacts: eigenvalue mismatch across the jump.
    pub lambda_jump: Option<f64>,
}

/// Distinct eigenvalues of every family at every profile row.
fn lambda_table(analysis: &Analysis, profile: &Profile) -> Result<Vec<Vec<f64>>> {
    profile
        .rows
        .iter()
        .map(|(_, u)| analysis.lambdas(u))
        .collect()
}

/// Indices of cells `(i, i+1)` holding a jump. Zero-width cells jump when
/// they carry any state change; interior cells must beat both the scaled
/// smooth difference quotient and their neighbors by the jump factor.
fn detect_jump_cells(profile: &Profile, cfg: &VerifyConfig) -> Vec<usize> {
    let n = profile.len();
    let mut widths = Vec::with_capacity(n - 1);
    let mut changes = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        widths.push(profile.xi(i + 1) - profile.xi(i));
        changes.push((&profile.state(i + 1).0 - &profile.state(i).0).amax());
    }
    let mut dqs: Vec<f64> = (0..n - 1)
        .filter(|&i| widths[i] > 0.0)
        .map(|i| changes[i] / widths[i])
        .collect();
    dqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dq95 = if dqs.is_empty() {
        0.0
    } else {
        dqs[(((dqs.len() as f64) * 0.95) as usize).min(dqs.len() - 1)]
    };
    let mut jumps = Vec::new();
    for i in 0..n - 1 {
        if widths[i] == 0.0 {
            if changes[i] > cfg.tau_jump_floor {
                jumps.push(i);
            }
            continue;
        }
        let smooth_bound = cfg.tau_jump_factor * widths[i] * dq95;
        let neighbor = changes
            .get(i.wrapping_sub(1))
            .copied()
            .unwrap_or(0.0)
            .max(changes.get(i + 1).copied().unwrap_or(0.0));
        if changes[i] > smooth_bound.max(cfg.tau_jump_floor)
            && changes[i] > cfg.tau_jump_factor * neighbor
        {
            jumps.push(i);
        }
    }
    jumps
}

/// Detect and classify every wave in a profile: jumps matched to the nearest
/// averaged-matrix eigenvalue and checked against their family's structure,
/// and tracking runs `lambda(U(xi)) ~ xi` collected as fans.
pub fn classify_profile(
    analysis: &Analysis,
    profile: &Profile,
    sectors: &SectorMap,
    cfg: &VerifyConfig,
) -> Result<Vec<DetectedWave>> {
    let sys = analysis.system;
    let lambdas = lambda_table(analysis, profile)?;
    let jump_cells = detect_jump_cells(profile, cfg);
    let mut waves = Vec::new();

    for &i in &jump_cells {
        let ul = profile.state(i).clone();
        let ur = profile.state(i + 1).clone();
        let xi = 0.5 * (profile.xi(i) + profile.xi(i + 1));
        let rh = averaging::rh_residual(sys, &ul, &ur, xi)?.norm();
        let ej = averaging::entropy_jump(sys, &ul, &ur, xi)?;
        let vl = pencil::to_v(sys, &ul)?;
        let vr = pencil::to_v(sys, &ur)?;
        let avg = harten_lax_average(sys, &vl, &vr)?;
        let eigs = avg.eigenvalues()?;
        let nearest = eigs
            .iter()
            .cloned()
            .min_by(|a, b| (a - xi).abs().partial_cmp(&(b - xi).abs()).unwrap())
            .unwrap();
        let family = (0..analysis.n_families())
            .min_by(|&a, &b| {
                (analysis.background_lambda(a) - nearest)
                    .abs()
                    .partial_cmp(&(analysis.background_lambda(b) - nearest).abs())
                    .unwrap()
            })
            .unwrap();
        let matched = (nearest - xi).abs() <= sectors.delta_s
            && (analysis.background_lambda(family) - nearest).abs() <= analysis.contour_radius;
        if !matched {
            waves.push(DetectedWave {
                kind: DetectedKind::Unmatched,
                family: None,
                xi_lo: xi,
                xi_hi: xi,
                row_lo: i,
                row_hi: i + 1,
                strength: Vec::new(),
                rh_norm: rh,
                entropy_jump: ej,
                leaf_residual: None,
                lambda_jump: None,
            });
            continue;
        }
        match analysis.kind(family) {
            FieldKind::LinearlyDegenerate => {
                let s = waves::intermediate_state(analysis, &vl, &vr, family);
                let (leaf_res, strength) = match s {
                    Ok(s) => {
                        let w =
                            waves::contact_leaf_point_v(analysis, &vl, &ul, family, s.as_slice())?;
                        ((&w - &vr).norm(), s.as_slice().to_vec())
                    }
                    Err(_) => (f64::INFINITY, Vec::new()),
                };
                let lambda_jump = (lambdas[i + 1][family] - lambdas[i][family]).abs();
                waves.push(DetectedWave {
                    kind: DetectedKind::Contact,
                    family: Some(family),
                    xi_lo: xi,
                    xi_hi: xi,
                    row_lo: i,
                    row_hi: i + 1,
                    strength,
                    rh_norm: rh,
                    entropy_jump: ej,
                    leaf_residual: Some(leaf_res),
                    lambda_jump: Some(lambda_jump),
                });
            }
            FieldKind::GenuinelyNonlinear => {
                let lbar = &analysis.background.groups[family].left;
                let sigma = (lbar * (&vr - &vl))[(0, 0)];
                waves.push(DetectedWave {
                    kind: DetectedKind::Shock,
                    family: Some(family),
                    xi_lo: xi,
                    xi_hi: xi,
                    row_lo: i,
                    row_hi: i + 1,
                    strength: vec![sigma],
                    rh_norm: rh,
                    entropy_jump: ej,
                    leaf_residual: None,
                    lambda_jump: None,
                });
            }
        }
    }

    // fans: maximal runs where the family eigenvalue tracks xi with slope
    // near one and the state actually varies
    let n = profile.len();
    for family in 0..analysis.n_families() {
        let mut i = 0;
        while i + 1 < n {
            let tracking = |k: usize| -> bool {
                if jump_cells.contains(&k) {
                    return false;
                }
                let w = profile.xi(k + 1) - profile.xi(k);
                if w <= 0.0 {
                    return false;
                }
                let in_band = (lambdas[k][family] - profile.xi(k)).abs() < cfg.tol_fan
                    && (lambdas[k + 1][family] - profile.xi(k + 1)).abs() < cfg.tol_fan;
                if !in_band {
                    return false;
                }
                let slope = (lambdas[k + 1][family] - lambdas[k][family]) / w;
                (0.5..=2.0).contains(&slope)
            };
            if !tracking(i) {
                i += 1;
                continue;
            }
            let lo = i;
            let mut hi = i + 1;
            while hi + 1 < n && tracking(hi) {
                hi += 1;
            }
            let diameter = profile.xi(hi) - profile.xi(lo);
            let max_cell = (lo..hi)
                .map(|k| profile.xi(k + 1) - profile.xi(k))
                .fold(0.0f64, f64::max);
            if diameter > 1.5 * max_cell {
                let vl = pencil::to_v(sys, profile.state(lo))?;
                let vr = pencil::to_v(sys, profile.state(hi))?;
                let strength = match analysis.kind(family) {
                    FieldKind::GenuinelyNonlinear => {
                        vec![(&analysis.background.groups[family].left * (&vr - &vl))[(0, 0)]]
                    }
                    FieldKind::LinearlyDegenerate => Vec::new(),
                };
                waves.push(DetectedWave {
                    kind: DetectedKind::Fan,
                    family: Some(family),
                    xi_lo: profile.xi(lo),
                    xi_hi: profile.xi(hi),
                    row_lo: lo,
                    row_hi: hi,
                    strength,
                    rh_norm: 0.0,
                    entropy_jump: 0.0,
                    leaf_residual: None,
                    lambda_jump: None,
                });
            }
            i = hi;
        }
    }
    waves.sort_by(|a, b| (a.xi_lo, a.xi_hi).partial_cmp(&(b.xi_lo, b.xi_hi)).unwrap());
    Ok(waves)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancyReport {
    pub pass: bool,
    pub max_oscillation: f64,
    /// Violating ranges `(xi_lo, xi_hi, oscillation)`.
    pub violations: Vec<(f64, f64, f64)>,
}

/// Oscillation of the profile outside every sector must stay below the
/// constancy tolerance; the far-field values are covered by the unbounded
/// outer runs.
pub fn verify_constancy(
    profile: &Profile,
    sectors: &SectorMap,
    cfg: &VerifyConfig,
) -> ConstancyReport {
    let n = profile.len();
    let mut max_osc = 0.0f64;
    let mut violations = Vec::new();
    let mut i = 0;
    while i < n {
        if !sectors.outside_all(profile.xi(i)) {
            i += 1;
            continue;
        }
        let lo = i;
        while i < n && sectors.outside_all(profile.xi(i)) {
            i += 1;
        }
        let hi = i - 1;
        let dim = profile.dim;
        let mut osc = 0.0f64;
        for j in 0..dim {
            let mut mn = f64::INFINITY;
            let mut mx = f64::NEG_INFINITY;
            for k in lo..=hi {
                let x = profile.state(k).0[j];
                mn = mn.min(x);
                mx = mx.max(x);
            }
            osc = osc.max(mx - mn);
        }
        max_osc = max_osc.max(osc);
        if osc > cfg.tol_const {
            violations.push((profile.xi(lo), profile.xi(hi), osc));
        }
    }
    ConstancyReport {
        pass: violations.is_empty(),
        max_oscillation: max_osc,
        violations,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RuleFlags {
    /// At most one contact and nothing else in each degenerate sector.
    pub ld_single_contact: bool,
    /// Family eigenvalue continuous across every contact.
    pub ld_lambda_continuous: bool,
    /// No interval on which the degenerate eigenvalue tracks xi.
    pub ld_point_f: bool,
    /// Forward: at most one wave per nonlinear family. Backward: no
    /// consecutive simple waves in one family.
    pub gnl_wave_count: bool,
    pub unmatched_jumps: usize,
    pub pass: bool,
}

/// Per-sector wave-count and continuity rules.
pub fn verify_sector_rules(
    analysis: &Analysis,
    classified: &[DetectedWave],
    sectors: &SectorMap,
    cfg: &VerifyConfig,
) -> RuleFlags {
    let mut ld_single_contact = true;
    let mut ld_lambda_continuous = true;
    let mut ld_point_f = true;
    let mut gnl_wave_count = true;
    let unmatched = classified
        .iter()
        .filter(|w| w.kind == DetectedKind::Unmatched)
        .count();

    for family in 0..analysis.n_families() {
        let in_family: Vec<&DetectedWave> = classified
            .iter()
            .filter(|w| w.family == Some(family))
            .collect();
        match analysis.kind(family) {
            FieldKind::LinearlyDegenerate => {
                let contacts = in_family
                    .iter()
                    .filter(|w| w.kind == DetectedKind::Contact)
                    .count();
                if contacts > 1 || in_family.len() != contacts {
                    ld_single_contact = false;
                }
                for w in &in_family {
                    if let Some(dl) = w.lambda_jump {
                        if dl > cfg.tol_lambda_cont {
                            ld_lambda_continuous = false;
                        }
                    }
                    if w.kind == DetectedKind::Fan {
                        ld_point_f = false;
                    }
                }
            }
            FieldKind::GenuinelyNonlinear => match sectors.side {
                Side::Forward => {
                    if in_family.len() > 1 {
                        gnl_wave_count = false;
                    }
                }
                Side::Backward => {
                    for pair in in_family.windows(2) {
                        if pair[0].kind == DetectedKind::Fan && pair[1].kind == DetectedKind::Fan {
                            gnl_wave_count = false;
                        }
                    }
                }
            },
        }
    }
    RuleFlags {
        ld_single_contact,
        ld_lambda_continuous,
        ld_point_f,
        gnl_wave_count,
        unmatched_jumps: unmatched,
        pass: ld_single_contact
            && ld_lambda_continuous
            && ld_point_f
            && gnl_wave_count
            && unmatched == 0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeakFormReport {
    pub max_residual: f64,
    pub max_entropy_violation: f64,
    pub pairs: usize,
}

/// Evaluate the self-similar weak form between row pairs:
/// `(f(V) - xi V)` differences must balance the running integral of `V`, and
/// the entropy counterpart must dissipate with the side-dependent sign.
pub fn verify_weak_form(
    analysis: &Analysis,
    profile: &Profile,
    pairs: &[(usize, usize)],
    side: Side,
    _cfg: &VerifyConfig,
) -> Result<WeakFormReport> {
    let sys = analysis.system;
    let n = profile.len();
    let m = profile.dim;
    let mut v_rows = Vec::with_capacity(n);
    let mut f_rows = Vec::with_capacity(n);
    let mut e_rows = Vec::with_capacity(n);
    let mut q_rows = Vec::with_capacity(n);
    for (_, u) in &profile.rows {
        v_rows.push(sys.flux_x(u)?);
        f_rows.push(sys.flux_y(u)?);
        e_rows.push(sys.entropy_flux_x(u)?);
        q_rows.push(sys.entropy_flux_y(u)?);
    }
    // cumulative quadrature over maximal runs of strictly increasing
    // abscissae: zero-width jump cells contribute nothing, two-row runs use
    // the trapezoid, longer runs integrate the parabola through three
    // neighboring rows on each cell. Compensated summation keeps the
    // accumulation error independent of the row count.
    let mut cell_w: Vec<[(usize, f64); 3]> = vec![[(0, 0.0); 3]; n - 1];
    let mut seg_lo = 0;
    while seg_lo + 1 < n {
        let mut seg_hi = seg_lo;
        while seg_hi + 1 < n && profile.xi(seg_hi + 1) > profile.xi(seg_hi) {
            seg_hi += 1;
        }
        if seg_hi == seg_lo {
            seg_lo += 1; // zero-width cell: no area
            continue;
        }
        for i in seg_lo..seg_hi {
            let s = if i == seg_lo { i } else { i - 1 };
            let uneven = seg_hi - seg_lo >= 2 && {
                let h1 = profile.xi(s + 1) - profile.xi(s);
                let h2 = profile.xi(s + 2) - profile.xi(s + 1);
                h1.min(h2) < 0.125 * h1.max(h2)
            };
            if seg_hi - seg_lo == 1 || uneven {
                // two-row runs fall back to the trapezoid, as do cells whose
                // stencil mixes very different spacings: a parabola there
                // amplifies any kink in the data by the spacing ratio
                let h = profile.xi(i + 1) - profile.xi(i);
                cell_w[i] = [(i, 0.5 * h), (i + 1, 0.5 * h), (i + 1, 0.0)];
                continue;
            }
            // work relative to the stencil center: the cubic antiderivative
            // cancels catastrophically in absolute abscissae
            let c = profile.xi(s + 1);
            let xs = [profile.xi(s) - c, 0.0, profile.xi(s + 2) - c];
            let (a, b) = (profile.xi(i) - c, profile.xi(i + 1) - c);
            for k in 0..3 {
                let (xj, xk) = match k {
                    0 => (xs[1], xs[2]),
                    1 => (xs[0], xs[2]),
                    _ => (xs[0], xs[1]),
                };
                let denom = (xs[k] - xj) * (xs[k] - xk);
                let prim = |x: f64| x * x * x / 3.0 - 0.5 * (xj + xk) * x * x + xj * xk * x;
                cell_w[i][k] = (s + k, (prim(b) - prim(a)) / denom);
            }
        }
        seg_lo = seg_hi;
    }
    let mut cum_v = vec![DVector::<f64>::zeros(m); n];
    let mut cum_e = vec![0.0f64; n];
    let mut comp_v = DVector::<f64>::zeros(m);
    let mut comp_e = 0.0f64;
    for i in 1..n {
        let w = &cell_w[i - 1];
        cum_v[i] = cum_v[i - 1].clone();
        for j in 0..m {
            let term: f64 = w.iter().map(|&(r, c)| c * v_rows[r][j]).sum::<f64>() - comp_v[j];
            let next = cum_v[i][j] + term;
            comp_v[j] = (next - cum_v[i][j]) - term;
            cum_v[i][j] = next;
        }
        let term: f64 = w.iter().map(|&(r, c)| c * e_rows[r]).sum::<f64>() - comp_e;
        let next = cum_e[i - 1] + term;
        comp_e = (next - cum_e[i - 1]) - term;
        cum_e[i] = next;
    }
    let mut max_res = 0.0f64;
    let mut max_violation = 0.0f64;
    for &(a, b) in pairs {
        if a >= n || b >= n {
            return Err(Error::Config(format!(
                "pair ({a}, {b}) outside the profile"
            )));
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let boundary =
            (&f_rows[b] - &v_rows[b] * profile.xi(b)) - (&f_rows[a] - &v_rows[a] * profile.xi(a));
        let res = (boundary + (&cum_v[b] - &cum_v[a])).amax();
        max_res = max_res.max(res);
        let d = (q_rows[b] - profile.xi(b) * e_rows[b]) - (q_rows[a] - profile.xi(a) * e_rows[a])
            + (cum_e[b] - cum_e[a]);
        let violation = match side {
            Side::Forward => d.max(0.0),
            Side::Backward => (-d).max(0.0),
        };
        max_violation = max_violation.max(violation);
    }
    Ok(WeakFormReport {
        max_residual: max_res,
        max_entropy_violation: max_violation,
        pairs: pairs.len(),
    })
}

/// Deterministic random row pairs, always including the full range.
pub fn random_row_pairs(profile: &Profile, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = profile.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count + 1);
    pairs.push((0, n - 1));
    while pairs.len() <= count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs
}

#[derive(Debug, Clone, Serialize)]
pub struct SbvReport {
    /// Total variation carried by the detected jumps, in V-space.
    pub jump_tv: f64,
    /// Largest difference quotient of the remaining continuous part.
    pub lipschitz: f64,
}

/// Split the V-profile into a saltus part supported on the detected jumps
/// and a continuous remainder, and measure both.
pub fn sbv_decompose(
    analysis: &Analysis,
    profile: &Profile,
    classified: &[DetectedWave],
) -> Result<SbvReport> {
    let sys = analysis.system;
    let n = profile.len();
    let mut v_rows = Vec::with_capacity(n);
    for (_, u) in &profile.rows {
        v_rows.push(sys.flux_x(u)?);
    }
    let jump_cells: std::collections::BTreeSet<usize> = classified
        .iter()
        .filter(|w| w.row_hi == w.row_lo + 1 && w.xi_lo == w.xi_hi)
        .map(|w| w.row_lo)
        .collect();
    let mut tv = 0.0f64;
    let mut lipschitz = 0.0f64;
    for i in 0..n - 1 {
        let dv = (&v_rows[i + 1] - &v_rows[i]).norm();
        if jump_cells.contains(&i) {
            tv += dv;
            continue;
        }
        let h = profile.xi(i + 1) - profile.xi(i);
        if h > 0.0 {
            lipschitz = lipschitz.max(dv / h);
        }
    }
    Ok(SbvReport {
        jump_tv: tv,
        lipschitz,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    pub weak_form_max: f64,
    pub entropy_violation_max: f64,
    pub constancy_oscillation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Flags {
    pub constancy: bool,
    pub weak_form: bool,
    pub entropy: bool,
    pub sector_rules: bool,
    pub pass: bool,
}

/// Full verification result for one profile.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub side: Side,
    pub sectors: SectorMap,
    pub waves: Vec<DetectedWave>,
    pub rules: RuleFlags,
    pub residuals: Residuals,
    pub sbv: SbvReport,
    pub flags: Flags,
    pub constancy: ConstancyReport,
}

impl StructureReport {
    pub fn all_pass(&self) -> bool {
        self.flags.pass
    }
}

/// Run every check on a profile and assemble the report.
pub fn verify_profile(
    analysis: &Analysis,
    profile: &Profile,
    side: Side,
    cfg: &VerifyConfig,
) -> Result<StructureReport> {
    profile.validate()?;
    let sectors = sector_map(analysis, side)?;
    let waves = classify_profile(analysis, profile, &sectors, cfg)?;
    let rules = verify_sector_rules(analysis, &waves, &sectors, cfg);
    let constancy = verify_constancy(profile, &sectors, cfg);
    let pairs = random_row_pairs(profile, cfg.weak_pairs, cfg.seed);
    let weak = verify_weak_form(analysis, profile, &pairs, side, cfg)?;
    let sbv = sbv_decompose(analysis, profile, &waves)?;
    let flags = Flags {
        constancy: constancy.pass,
        weak_form: weak.max_residual < cfg.tol_weak,
        entropy: weak.max_entropy_violation < cfg.tol_entropy,
        sector_rules: rules.pass,
        pass: constancy.pass
            && weak.max_residual < cfg.tol_weak
            && weak.max_entropy_violation < cfg.tol_entropy
            && rules.pass,
    };
    Ok(StructureReport {
        side,
        sectors,
        waves,
        rules,
        residuals: Residuals {
            weak_form_max: weak.max_residual,
            entropy_violation_max: weak.max_entropy_violation,
            constancy_oscillation: constancy.max_oscillation,
        },
        sbv,
        flags,
        constancy,
    })
}
