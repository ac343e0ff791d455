//! Sampled self-similar profiles `xi -> U(xi)` and their CSV encoding.
//!
//! Jump abscissae are stored twice, with the left and right one-sided values
//! on consecutive rows, so a discontinuous profile round-trips through the
//! text format without smearing. Floats are written with 17 significant
//! digits, which reproduces the binary doubles exactly.

use crate::error::{Error, Result};
use crate::pencil::Analysis;
use crate::riemann::{self, WaveFan};
use crate::systems::State;

#[derive(Debug, Clone)]
pub struct Profile {
    pub dim: usize,
    /// Rows `(xi, U)` with nondecreasing `xi`; a repeated `xi` carries the
    /// one-sided limits of a jump and appears exactly twice.
    pub rows: Vec<(f64, State)>,
}

impl Profile {
    pub fn new(dim: usize, rows: Vec<(f64, State)>) -> Result<Profile> {
        let p = Profile { dim, rows };
        p.validate()?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn xi(&self, i: usize) -> f64 {
        self.rows[i].0
    }

    pub fn state(&self, i: usize) -> &State {
        &self.rows[i].1
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() < 2 {
            return Err(Error::Malformed("profile needs at least two rows".into()));
        }
        let mut run = 1usize;
        for (k, pair) in self.rows.windows(2).enumerate() {
            let (a, b) = (pair[0].0, pair[1].0);
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::Malformed("non-finite abscissa".into()));
            }
            if b < a {
                return Err(Error::Malformed(format!(
                    "abscissae decrease at row {}: {a} then {b}",
                    k + 1
                )));
            }
            run = if b == a { run + 1 } else { 1 };
            if run > 2 {
                return Err(Error::Malformed(format!(
                    "abscissa {b} appears more than twice"
                )));
            }
        }
        for (_, u) in &self.rows {
            if u.0.len() != self.dim {
                return Err(Error::Malformed("row width differs from dimension".into()));
            }
            if u.0.iter().any(|x| !x.is_finite()) {
                return Err(Error::Malformed("non-finite state entry".into()));
            }
        }
        Ok(())
    }

    /// Sample a fan on the grid, inserting duplicated rows at every
    /// discontinuity and single breakpoint rows at the edges of every
    /// simple-wave fan that fall inside the grid range. Breakpoints keep the
    /// trapezoid quadrature of the verifier exact across jumps and cleanly
    /// second order across the kinks at fan edges.
    pub fn from_fan(analysis: &Analysis, fan: &WaveFan, grid: &[f64]) -> Result<Profile> {
        if grid.len() < 2 {
            return Err(Error::Config("grid needs at least two points".into()));
        }
        let lo = grid[0];
        let hi = *grid.last().unwrap();
        let mut grid: Vec<f64> = grid.to_vec();
        for w in &fan.waves {
            if !w.is_discontinuity() {
                for edge in [w.xi_lo, w.xi_hi] {
                    if edge > lo && edge < hi {
                        grid.push(edge);
                    }
                }
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let jumps: Vec<usize> = fan
            .waves
            .iter()
            .enumerate()
            .filter(|(_, w)| w.is_discontinuity() && w.xi_lo > lo && w.xi_lo < hi)
            .map(|(k, _)| k)
            .collect();
        let mut rows: Vec<(f64, State)> = Vec::with_capacity(grid.len() + 2 * jumps.len());
        let mut grid_iter = grid.iter().peekable();
        for &k in &jumps {
            let xi_j = fan.waves[k].xi_lo;
            while let Some(&&xi) = grid_iter.peek() {
                if xi < xi_j {
                    rows.push((xi, riemann::state_at(analysis, fan, xi)?));
                    grid_iter.next();
                } else if xi == xi_j {
                    // replaced by the explicit one-sided pair
                    grid_iter.next();
                } else {
                    break;
                }
            }
            rows.push((xi_j, fan.states[k].clone()));
            rows.push((xi_j, fan.states[k + 1].clone()));
        }
        for &xi in grid_iter {
            rows.push((xi, riemann::state_at(analysis, fan, xi)?));
        }
        Profile::new(analysis.dim(), rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 24 * (self.dim + 1));
        out.push_str("xi");
        for j in 1..=self.dim {
            out.push_str(&format!(",u{j}"));
        }
        out.push('\n');
        for (xi, u) in &self.rows {
            out.push_str(&format!("{xi:.16e}"));
            for j in 0..self.dim {
                out.push_str(&format!(",{:.16e}", u.0[j]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Profile> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Malformed("empty profile file".into()))?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"xi") || cols.len() < 2 {
            return Err(Error::Malformed(format!("unexpected header '{header}'")));
        }
        let dim = cols.len() - 1;
        for (j, c) in cols.iter().enumerate().skip(1) {
            if *c != format!("u{j}") {
                return Err(Error::Malformed(format!("unexpected header column '{c}'")));
            }
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != dim + 1 {
                return Err(Error::Malformed(format!(
                    "row {}: expected {} fields, got {}",
                    k + 2,
                    dim + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::Malformed(format!("row {}: bad number '{s}'", k + 2)))
            };
            let xi = parse(fields[0])?;
            let mut u = Vec::with_capacity(dim);
            for f in &fields[1..] {
                u.push(parse(f)?);
            }
            rows.push((xi, State::from_slice(&u)));
        }
        Profile::new(dim, rows)
    }
}
