//! Run configuration: defaults, a flat key-value config file, and
//! command-line overrides, in that precedence order.

use std::path::PathBuf;

use serde::Serialize;
use wavefan::structure::VerifyConfig;
use wavefan::systems::{Euler, EulerParams, LinearSystem, System};
use wavefan::waves::Side;
use wavefan::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SystemKind {
    #[serde(rename = "euler")]
    Euler,
    #[serde(rename = "linear")]
    Linear,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub system: SystemKind,
    pub gamma: f64,
    pub m0: f64,
    pub epsilon: f64,
    /// Conserved left state; defaults to the background.
    pub left_state: Option<Vec<f64>>,
    /// Conserved right state for a Riemann solve.
    pub right_state: Option<Vec<f64>>,
    /// Alternative right-state spec: stacked wave strengths applied to the
    /// left state, one scalar per nonlinear family and one block of leaf
    /// coordinates per degenerate family, in family order.
    pub right_strengths: Option<Vec<f64>>,
    /// Wave list for `compose`: entries `kind:family:s1[,s2,...]` separated
    /// by semicolons, e.g. `shock:2:-5e-4;contact:1:1e-4,2e-4`.
    pub waves: Option<String>,
    pub side: Side,
    pub points_per_sector: usize,
    pub margin: f64,
    pub seed: u64,
    #[serde(skip)]
    pub output: PathBuf,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemKind::Euler,
            gamma: 1.4,
            m0: 2.0,
            epsilon: 1e-3,
            left_state: None,
            right_state: None,
            right_strengths: None,
            waves: None,
            side: Side::Forward,
            points_per_sector: 4096,
            margin: 0.25,
            seed: 0,
            output: default_output(),
            verify: VerifyConfig::default(),
        }
    }
}

fn default_output() -> PathBuf {
    std::env::var_os("WAVEFAN_OUTPUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Command-line overrides; every config key has a flag.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// System: euler | linear.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub m0: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Comma-separated conserved components.
    #[arg(long)]
    pub left_state: Option<String>,
    #[arg(long)]
    pub right_state: Option<String>,
    #[arg(long)]
    pub right_strengths: Option<String>,
    #[arg(long)]
    pub waves: Option<String>,
    /// forward | backward.
    #[arg(long)]
    pub side: Option<String>,
    #[arg(long)]
    pub points_per_sector: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (env WAVEFAN_OUTPUT supplies the default).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub tol_const: Option<f64>,
    #[arg(long)]
    pub tol_fan: Option<f64>,
    #[arg(long)]
    pub tau_jump_floor: Option<f64>,
    #[arg(long)]
    pub tau_jump_factor: Option<f64>,
    #[arg(long)]
    pub tol_weak: Option<f64>,
    #[arg(long)]
    pub tol_entropy: Option<f64>,
    #[arg(long)]
    pub tol_leaf: Option<f64>,
    #[arg(long)]
    pub tol_lambda_cont: Option<f64>,
    #[arg(long)]
    pub weak_pairs: Option<usize>,
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number '{t}' in vector")))
        })
        .collect()
}

fn parse_side(text: &str) -> Result<Side> {
    match text {
        "forward" => Ok(Side::Forward),
        "backward" => Ok(Side::Backward),
        other => Err(Error::Config(format!(
            "side must be forward or backward, got '{other}'"
        ))),
    }
}

fn parse_system(text: &str) -> Result<SystemKind> {
    match text {
        "euler" => Ok(SystemKind::Euler),
        "linear" => Ok(SystemKind::Linear),
        other => Err(Error::Config(format!(
            "system must be euler or linear, got '{other}'"
        ))),
    }
}

impl RunConfig {
    pub fn load(overrides: &Overrides) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &overrides.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_file(&text)?;
        }
        cfg.apply_overrides(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_file(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("config parse error: {e}")))?;
        for (key, value) in table {
            self.apply_key(&key, &value)?;
        }
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &toml::Value) -> Result<()> {
        use toml::Value;
        let bad = || Error::Config(format!("bad value for '{key}': {value}"));
        let as_f64 = |v: &Value| -> Result<f64> {
            match v {
                Value::Float(x) => Ok(*x),
                Value::Integer(x) => Ok(*x as f64),
                Value::String(s) => s.parse().map_err(|_| bad()),
                _ => Err(bad()),
            }
        };
        let as_usize = |v: &Value| -> Result<usize> {
            match v {
                Value::Integer(x) if *x >= 0 => Ok(*x as usize),
                _ => Err(bad()),
            }
        };
        let as_str = |v: &Value| -> Result<String> {
            match v {
                Value::String(s) => Ok(s.clone()),
                _ => Err(bad()),
            }
        };
        match key {
            "system" => self.system = parse_system(&as_str(value)?)?,
            "gamma" => self.gamma = as_f64(value)?,
            "m0" => self.m0 = as_f64(value)?,
            "epsilon" => self.epsilon = as_f64(value)?,
            "left_state" => self.left_state = Some(parse_vector(&as_str(value)?)?),
            "right_state" => self.right_state = Some(parse_vector(&as_str(value)?)?),
            "right_strengths" => self.right_strengths = Some(parse_vector(&as_str(value)?)?),
            "waves" => self.waves = Some(as_str(value)?),
            "side" => self.side = parse_side(&as_str(value)?)?,
            "points_per_sector" => self.points_per_sector = as_usize(value)?,
            "margin" => self.margin = as_f64(value)?,
            "seed" => self.seed = as_usize(value)? as u64,
            "output" => self.output = PathBuf::from(as_str(value)?),
            "tol_const" => self.verify.tol_const = as_f64(value)?,
            "tol_fan" => self.verify.tol_fan = as_f64(value)?,
            "tau_jump_floor" => self.verify.tau_jump_floor = as_f64(value)?,
            "tau_jump_factor" => self.verify.tau_jump_factor = as_f64(value)?,
            "tol_weak" => self.verify.tol_weak = as_f64(value)?,
            "tol_entropy" => self.verify.tol_entropy = as_f64(value)?,
            "tol_leaf" => self.verify.tol_leaf = as_f64(value)?,
            "tol_lambda_cont" => self.verify.tol_lambda_cont = as_f64(value)?,
            "weak_pairs" => self.verify.weak_pairs = as_usize(value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    fn apply_overrides(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = &o.system {
            self.system = parse_system(s)?;
        }
        if let Some(x) = o.gamma {
            self.gamma = x;
        }
        if let Some(x) = o.m0 {
            self.m0 = x;
        }
        if let Some(x) = o.epsilon {
            self.epsilon = x;
        }
        if let Some(s) = &o.left_state {
            self.left_state = Some(parse_vector(s)?);
        }
        if let Some(s) = &o.right_state {
            self.right_state = Some(parse_vector(s)?);
        }
        if let Some(s) = &o.right_strengths {
            self.right_strengths = Some(parse_vector(s)?);
        }
        if let Some(s) = &o.waves {
            self.waves = Some(s.clone());
        }
        if let Some(s) = &o.side {
            self.side = parse_side(s)?;
        }
        if let Some(x) = o.points_per_sector {
            self.points_per_sector = x;
        }
        if let Some(x) = o.margin {
            self.margin = x;
        }
        if let Some(x) = o.seed {
            self.seed = x;
        }
        if let Some(p) = &o.output {
            self.output = p.clone();
        }
        if let Some(x) = o.tol_const {
            self.verify.tol_const = x;
        }
        if let Some(x) = o.tol_fan {
            self.verify.tol_fan = x;
        }
        if let Some(x) = o.tau_jump_floor {
            self.verify.tau_jump_floor = x;
        }
        if let Some(x) = o.tau_jump_factor {
            self.verify.tau_jump_factor = x;
        }
        if let Some(x) = o.tol_weak {
            self.verify.tol_weak = x;
        }
        if let Some(x) = o.tol_entropy {
            self.verify.tol_entropy = x;
        }
        if let Some(x) = o.tol_leaf {
            self.verify.tol_leaf = x;
        }
        if let Some(x) = o.tol_lambda_cont {
            self.verify.tol_lambda_cont = x;
        }
        if let Some(x) = o.weak_pairs {
            self.verify.weak_pairs = x;
        }
        self.verify.seed = self.seed;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.system == SystemKind::Euler && self.m0.abs() <= 1.0 {
            return Err(Error::Config(format!(
                "background not supersonic: |M0| = {} <= 1",
                self.m0.abs()
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.points_per_sector < 64 {
            return Err(Error::Config(
                "grid needs at least 64 points per sector".into(),
            ));
        }
        Ok(())
    }

    pub fn build_system(&self) -> Result<Box<dyn System>> {
        match self.system {
            SystemKind::Euler => Ok(Box::new(Euler::with_radius(
                EulerParams {
                    gamma: self.gamma,
                    m0: self.m0,
                },
                self.epsilon,
            )?)),
            SystemKind::Linear => Ok(Box::new(LinearSystem::with_radius(self.epsilon))),
        }
    }
}
