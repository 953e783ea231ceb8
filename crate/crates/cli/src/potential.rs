//! Trapping potentials sampled on the grid, shifted so the minimum is 0.

use std::fmt;
use std::path::{Path, PathBuf};

use hartree_core::nonlocal_operators::KineticSpec;
use hartree_core::{normalize_mass, sample, Field, Grid3, Operators};

use crate::config::parse_point;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// No trap. Only meaningful for free-space runs.
    Zero,
    /// `ω²|x|²`
    Harmonic { omega: f64 },
    /// `c|x|^p`
    Power { p: f64, c: f64 },
    /// Component `i` vanishes on the unit ball around `xᵢ` and is at least
    /// `2 c_ζ · depth_scale` outside radius 2.
    DoubleWell {
        x1: [f64; 3],
        x2: [f64; 3],
        depth_scale: f64,
    },
    /// `n³` samples in grid index order.
    Tabulated { path: PathBuf },
}

/// Couplings entering the double-well depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellCouplings {
    pub a_star: f64,
    pub beta: f64,
    pub m: f64,
}

fn args<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')
}

fn num(s: &str) -> CliResult<f64> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Potential(format!("'{s}' is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::Potential(format!("'{s}' is not finite")));
    }
    Ok(x)
}

impl PotentialSpec {
    /// `zero`, `harmonic(ω)`, `power(p, c)`, `double_well(x y z; x y z; depth)`,
    /// `tabulated(path)`.
    pub fn parse(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(PotentialSpec::Zero);
        }
        if let Some(a) = args(s, "harmonic") {
            let omega = num(a)?;
            return Ok(PotentialSpec::Harmonic { omega });
        }
        if let Some(a) = args(s, "power") {
            let parts: Vec<&str> = a.split(',').collect();
            let [p, c] = parts.as_slice() else {
                return Err(CliError::Potential(format!("power needs (p, c), got '{a}'")));
            };
            let (p, c) = (num(p)?, num(c)?);
            if !(p > 0.0 && c > 0.0) {
                return Err(CliError::Potential(format!(
                    "power needs p, c > 0, got p = {p}, c = {c}"
                )));
            }
            return Ok(PotentialSpec::Power { p, c });
        }
        if let Some(a) = args(s, "double_well") {
            let parts: Vec<&str> = a.split(';').collect();
            let [x1, x2, d] = parts.as_slice() else {
                return Err(CliError::Potential(format!(
                    "double_well needs (x1; x2; depth_scale), got '{a}'"
                )));
            };
            let x1 = parse_point(x1).map_err(CliError::Potential)?;
            let x2 = parse_point(x2).map_err(CliError::Potential)?;
            let depth_scale = num(d)?;
            if !(depth_scale >= 1.0) {
                return Err(CliError::Potential(format!(
                    "depth_scale {depth_scale} must be at least 1"
                )));
            }
            let sep = dist(x1, x2);
            if !(sep > 5.0) {
                return Err(CliError::Potential(format!("wells {sep} apart; need more than 5")));
            }
            return Ok(PotentialSpec::DoubleWell { x1, x2, depth_scale });
        }
        if let Some(a) = args(s, "tabulated") {
            return Ok(PotentialSpec::Tabulated {
                path: PathBuf::from(a.trim()),
            });
        }
        Err(CliError::Potential(format!("unknown potential '{s}'")))
    }

    /// `false` for the zero potential, which does not confine.
    pub fn is_trapping(&self) -> bool {
        !matches!(self, PotentialSpec::Zero)
    }

    /// Seed center implied by the potential for the given component.
    pub fn well_center(&self, component: usize) -> Option<[f64; 3]> {
        match self {
            PotentialSpec::DoubleWell { x1, x2, .. } => Some(if component == 0 { *x1 } else { *x2 }),
            _ => None,
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pt = |x: &[f64; 3]| format!("{:?} {:?} {:?}", x[0], x[1], x[2]);
        match self {
            PotentialSpec::Zero => write!(f, "zero"),
            PotentialSpec::Harmonic { omega } => write!(f, "harmonic({omega:?})"),
            PotentialSpec::Power { p, c } => write!(f, "power({p:?}, {c:?})"),
            PotentialSpec::DoubleWell { x1, x2, depth_scale } => {
                write!(f, "double_well({}; {}; {depth_scale:?})", pt(x1), pt(x2))
            }
            PotentialSpec::Tabulated { path } => write!(f, "tabulated({})", path.display()),
        }
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|d| (a[d] - b[d]).powi(2)).sum::<f64>().sqrt()
}

/// Samples `spec` for component `component` (0 or 1).
pub fn build_potential(spec: &PotentialSpec, grid: Grid3, component: usize, wc: &WellCouplings) -> CliResult<Field> {
    let raw = match spec {
        PotentialSpec::Zero => Field::zeros(grid),
        PotentialSpec::Harmonic { omega } => {
            let w2 = omega * omega;
            sample(grid, |x| w2 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))?
        }
        PotentialSpec::Power { p, c } => {
            sample(grid, |x| c * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt().powf(*p))?
        }
        PotentialSpec::DoubleWell { x1, x2, depth_scale } => {
            let c = c_zeta(grid, *x1, *x2, wc)?;
            let center = if component == 0 { *x1 } else { *x2 };
            let depth = 2.0 * c * depth_scale;
            sample(grid, |x| {
                let r = dist(x, center);
                depth * smoothstep(r - 1.0) + (r - 2.0).max(0.0).powi(3)
            })?
        }
        PotentialSpec::Tabulated { path } => read_table(path, grid)?,
    };
    let min = raw.min();
    Ok(raw.map(|v| v - min))
}

/// C² step from 0 at `t <= 0` to 1 at `t >= 1`.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// Unit-mass bump `∝ (1 - |x - c|²)³₊`.
pub fn well_bump(grid: Grid3, center: [f64; 3]) -> CliResult<Field> {
    let b = sample(grid, |x| {
        let r2: f64 = (0..3).map(|d| (x[d] - center[d]).powi(2)).sum();
        (1.0 - r2).max(0.0).powi(3)
    })?;
    Ok(normalize_mass(&b, 1.0)?)
}

/// `c_ζ = Σᵢ [K_m(ζᵢ) - ((a* - β)/2) D(ζᵢ, ζᵢ)] - β D(ζ₁, ζ₂)`, the energy of
/// the bump pair at the border couplings `aᵢ = a* - β`.
pub fn c_zeta(grid: Grid3, x1: [f64; 3], x2: [f64; 3], wc: &WellCouplings) -> CliResult<f64> {
    let quarter = grid.box_length() / 4.0;
    for (name, x) in [("x1", x1), ("x2", x2)] {
        let r = dist(x, [0.0; 3]);
        if !(r < quarter) {
            return Err(CliError::Potential(format!(
                "well {name} at radius {r} is outside |x| < L/4 = {quarter}"
            )));
        }
    }
    if grid.spacing() > 0.5 {
        return Err(CliError::Potential(format!(
            "spacing {} cannot resolve unit wells; need at most 0.5",
            grid.spacing()
        )));
    }
    let ops = Operators::new(grid);
    let spec = KineticSpec::new(wc.m)?;
    let z1 = well_bump(grid, x1)?;
    let z2 = well_bump(grid, x2)?;
    let a = wc.a_star - wc.beta;
    let mut c = -wc.beta * ops.hartree_energy(&z1, &z2)?;
    for z in [&z1, &z2] {
        c += ops.kinetic_energy(z, spec)? - 0.5 * a * ops.hartree_energy(z, z)?;
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(CliError::Potential(format!("well depth constant {c} is not positive")));
    }
    Ok(c)
}

fn read_table(path: &Path, grid: Grid3) -> CliResult<Field> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Potential(format!("cannot read {}: {e}", path.display())))?;
    let mut vals = Vec::with_capacity(grid.len());
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let v: f64 = tok
                .parse()
                .map_err(|_| CliError::Potential(format!("{}:{}: '{tok}' is not a number", path.display(), no + 1)))?;
            if !v.is_finite() {
                return Err(CliError::Potential(format!(
                    "{}:{}: non-finite sample",
                    path.display(),
                    no + 1
                )));
            }
            if v < 0.0 {
                return Err(CliError::Potential(format!(
                    "{}:{}: negative sample {v}",
                    path.display(),
                    no + 1
                )));
            }
            vals.push(v);
        }
    }
    if vals.len() != grid.len() {
        return Err(CliError::Potential(format!(
            "{} holds {} samples, the grid needs {}",
            path.display(),
            vals.len(),
            grid.len()
        )));
    }
    Ok(Field::from_values(grid, vals)?)
}
