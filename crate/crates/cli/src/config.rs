//! Flat `key = value` run configuration.
//!
//! Every key has a default, so the echoed text of a resolved config is a
//! complete config file on its own.

use std::fmt;
use std::path::{Path, PathBuf};

use hartree_core::energy_model::{thresholds, Params};
use hartree_core::Grid3;

use crate::error::{CliError, CliResult};

/// Known keys in echo order, with defaults.
pub const KEYS: &[(&str, &str)] = &[
    ("n", "48"),
    ("box", "16"),
    ("gs_n", "64"),
    ("gs_box", "32"),
    ("gs_tol", "1e-10"),
    ("gs_max_iter", "5000"),
    ("a1", "0.5*astar"),
    ("a2", "0.5*astar"),
    ("beta", "0.5*beta_low"),
    ("m", "0"),
    ("v1", "harmonic(1)"),
    ("v2", "harmonic(1)"),
    ("tol_e", "1e-10"),
    ("tol_r", "1e-4"),
    ("max_iter", "20000"),
    ("energy_floor", "-1e6"),
    ("initial_step", "0.1"),
    ("seed1", "auto"),
    ("seed2", "auto"),
    ("eta", "false"),
    ("eta_refine_iters", "150"),
    ("output", "hartree-out"),
    ("jobs", "1"),
    ("sweep_a1", "0.1:1.5:11"),
    ("sweep_a2", "a1"),
    ("sweep_beta", "0:1.5:11"),
    ("sweep_beta_unit", "astar"),
    ("sweep_eta", "false"),
    ("sweep_minimize", "false"),
    ("probe_radii", "1:10:11:log"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(_, v)| v.to_string()).collect(),
        }
    }
}

fn slot(key: &str) -> CliResult<usize> {
    KEYS.iter()
        .position(|(k, _)| *k == key)
        .ok_or_else(|| CliError::Config(format!("unknown key '{key}'")))
}

impl RunConfig {
    /// Parses config text over the defaults. `#` starts a comment line.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value'", no + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| CliError::Config(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        if value.is_empty() {
            return Err(CliError::Config(format!("empty value for '{key}'")));
        }
        if value.contains('\n') {
            return Err(CliError::Config(format!("multi-line value for '{key}'")));
        }
        let i = slot(key)?;
        self.values[i] = value.to_string();
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        match slot(key) {
            Ok(i) => &self.values[i],
            Err(_) => panic!("config key '{key}' is not in the key table"),
        }
    }

    pub fn f64(&self, key: &str) -> CliResult<f64> {
        parse_f64(self.get(key)).map_err(|e| CliError::Config(format!("{key}: {e}")))
    }

    pub fn usize(&self, key: &str) -> CliResult<usize> {
        self.get(key)
            .parse()
            .map_err(|_| CliError::Config(format!("{key}: '{}' is not a count", self.get(key))))
    }

    pub fn bool(&self, key: &str) -> CliResult<bool> {
        match self.get(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(CliError::Config(format!("{key}: '{other}' is not a boolean"))),
        }
    }

    pub fn grid(&self) -> CliResult<Grid3> {
        Ok(Grid3::new_smooth(self.usize("n")?, self.f64("box")?)?)
    }

    pub fn gs_grid(&self) -> CliResult<Grid3> {
        Ok(Grid3::new_smooth(self.usize("gs_n")?, self.f64("gs_box")?)?)
    }

    pub fn output(&self) -> PathBuf {
        PathBuf::from(self.get("output"))
    }

    pub fn seed(&self, key: &str) -> CliResult<Option<[f64; 3]>> {
        let raw = self.get(key);
        if raw == "auto" {
            return Ok(None);
        }
        parse_point(raw)
            .map(Some)
            .map_err(|e| CliError::Config(format!("{key}: {e}")))
    }

    /// Couplings resolved against `a*`; `beta` may refer to the thresholds
    /// of the resolved `(a₁, a₂)`.
    pub fn params(&self, a_star: f64) -> CliResult<Params> {
        let a1 = Scalar::parse(self.get("a1"))?.resolve_coupling(a_star, "a1")?;
        let a2 = Scalar::parse(self.get("a2"))?.resolve_coupling(a_star, "a2")?;
        let beta = Scalar::parse(self.get("beta"))?.resolve(a1, a2, a_star)?;
        Ok(Params::new(a1, a2, beta, self.f64("m")?)?)
    }

    /// Complete text form; parsing it yields `self` again.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((k, _), v) in KEYS.iter().zip(&self.values) {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !x.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(x)
}

/// `x y z` or `x, y, z`.
pub fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() != 3 {
        return Err(format!("'{s}' is not a point with three coordinates"));
    }
    Ok([parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Absolute,
    AStar,
    BetaLow,
    BetaHigh,
}

impl Unit {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s.trim() {
            "abs" | "absolute" => Ok(Unit::Absolute),
            "astar" => Ok(Unit::AStar),
            "beta_low" => Ok(Unit::BetaLow),
            "beta_high" => Ok(Unit::BetaHigh),
            other => Err(CliError::Config(format!("unknown unit '{other}'"))),
        }
    }

    /// Size of one unit for couplings `(a₁, a₂)`.
    pub fn size(self, a1: f64, a2: f64, a_star: f64) -> CliResult<f64> {
        match self {
            Unit::Absolute => Ok(1.0),
            Unit::AStar => Ok(a_star),
            Unit::BetaLow => thresholds(a1, a2, a_star)?
                .beta_low
                .ok_or_else(|| CliError::Config(format!("beta_low is undefined for a1 = {a1}, a2 = {a2}"))),
            Unit::BetaHigh => Ok(thresholds(a1, a2, a_star)?.beta_high),
        }
    }
}

/// A number times a computed constant: `0.5*astar`, `beta_high`, `1.3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalar {
    pub factor: f64,
    pub unit: Unit,
}

impl Scalar {
    pub fn parse(s: &str) -> CliResult<Self> {
        let bad = |e: String| CliError::Config(e);
        let s = s.trim();
        if let Some((num, unit)) = s.split_once('*') {
            return Ok(Self {
                factor: parse_f64(num).map_err(bad)?,
                unit: Unit::parse(unit)?,
            });
        }
        if let Ok(x) = parse_f64(s) {
            return Ok(Self {
                factor: x,
                unit: Unit::Absolute,
            });
        }
        Ok(Self {
            factor: 1.0,
            unit: Unit::parse(s)?,
        })
    }

    pub fn resolve(&self, a1: f64, a2: f64, a_star: f64) -> CliResult<f64> {
        Ok(self.factor * self.unit.size(a1, a2, a_star)?)
    }

    fn resolve_coupling(&self, a_star: f64, key: &str) -> CliResult<f64> {
        match self.unit {
            Unit::Absolute | Unit::AStar => Ok(self.factor * self.unit.size(0.0, 0.0, a_star)?),
            _ => Err(CliError::Config(format!("{key} may only be given in units of astar"))),
        }
    }
}

/// `start:end:count`, evenly spaced and inclusive; `count = 0` is empty.
/// A trailing `:log` spaces the points geometrically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub count: usize,
    pub log: bool,
}

impl Range {
    pub fn parse(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = |e: String| CliError::Config(format!("range '{s}': {e}"));
        match parts.as_slice() {
            [x] => {
                let x = parse_f64(x).map_err(bad)?;
                Ok(Self {
                    start: x,
                    end: x,
                    count: 1,
                    log: false,
                })
            }
            [a, b, c, rest @ ..] if rest.len() <= 1 => {
                let log = match rest {
                    [] => false,
                    [t] if t.trim() == "log" => true,
                    _ => return Err(bad("the only spacing flag is 'log'".into())),
                };
                let r = Self {
                    start: parse_f64(a).map_err(bad)?,
                    end: parse_f64(b).map_err(bad)?,
                    count: c.trim().parse().map_err(|_| bad(format!("'{c}' is not a count")))?,
                    log,
                };
                if log && !(r.start > 0.0 && r.end > 0.0) {
                    return Err(bad("log spacing needs positive ends".into()));
                }
                Ok(r)
            }
            _ => Err(bad("expected start:end:count[:log]".into())),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.start],
            c => (0..c)
                .map(|i| {
                    let t = i as f64 / (c - 1) as f64;
                    if self.log {
                        self.start * (self.end / self.start).powf(t)
                    } else {
                        self.start + (self.end - self.start) * t
                    }
                })
                .collect(),
        }
    }
}

/// Second coupling of a sweep: tied to `a₁` or fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepA2 {
    /// `a₂ = factor * a₁`
    Tied(f64),
    Fixed(Scalar),
}

impl SweepA2 {
    pub fn parse(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if s == "a1" {
            return Ok(SweepA2::Tied(1.0));
        }
        if let Some(num) = s.strip_suffix("*a1") {
            return Ok(SweepA2::Tied(parse_f64(num).map_err(CliError::Config)?));
        }
        Ok(SweepA2::Fixed(Scalar::parse(s)?))
    }

    pub fn resolve(&self, a1: f64, a_star: f64) -> CliResult<f64> {
        match self {
            SweepA2::Tied(c) => Ok(c * a1),
            SweepA2::Fixed(s) => s.resolve_coupling(a_star, "sweep_a2"),
        }
    }
}
