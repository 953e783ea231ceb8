use crate::energy_model::{check_potential, EnergyParts, Params};
use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::nonlocal_operators::{KineticSpec, Operators};
use crate::spectral_field::resample::{contract_potential, cubic_matrix, separable_apply};
use crate::spectral_field::{inner_product, normalize_mass, Field};

/// Energies along a one-parameter family of trial pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    /// Name of the family parameter, `lambda` or `R`.
    pub parameter: &'static str,
    pub values: Vec<f64>,
    pub energies: Vec<f64>,
    /// Coefficient `c` of the fit `cx + b + d/x²` over the last decade.
    pub slope: f64,
    pub intercept: f64,
    /// Slope negative and energies strictly decreasing over the last decade.
    pub unbounded_below: bool,
}

impl ProbeReport {
    fn from_energies(parameter: &'static str, values: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
            return Err(Error::NonFiniteField(format!("probe energy {e}")));
        }
        let top = values.last().copied().unwrap_or(0.0);
        let first = values.iter().position(|&x| x >= top / 10.0).unwrap_or(0);
        // keep at least three points for the fit when available
        let first = first.min(values.len().saturating_sub(3));
        let (xs, es) = (&values[first..], &energies[first..]);
        let (slope, intercept) = fit(xs, es)?;
        let decreasing = es.windows(2).all(|w| w[1] < w[0]);
        Ok(Self {
            parameter,
            slope,
            intercept,
            unbounded_below: slope < 0.0 && decreasing,
            values,
            energies,
        })
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().copied().zip(self.energies.iter().copied())
    }
}

/// Least squares for `cx + b + d/x²` (or `cx + b` with two points). For a
/// profile symmetric about its center the potential term is
/// `V(x₀) + O(x⁻²)`, the odd Taylor terms cancelling.
fn fit(xs: &[f64], es: &[f64]) -> Result<(f64, f64)> {
    match xs.len() {
        0 | 1 => Err(Error::InvalidParameter(
            "a probe needs at least two parameter values".into(),
        )),
        2 => {
            let c = (es[1] - es[0]) / (xs[1] - xs[0]);
            Ok((c, es[0] - c * xs[0]))
        }
        _ => {
            let mut a = [[0.0f64; 3]; 3];
            let mut r = [0.0f64; 3];
            for (&x, &e) in xs.iter().zip(es) {
                let basis = [x, 1.0, 1.0 / (x * x)];
                for i in 0..3 {
                    for j in 0..3 {
                        a[i][j] += basis[i] * basis[j];
                    }
                    r[i] += basis[i] * e;
                }
            }
            let s = solve3(a, r).ok_or_else(|| Error::Degenerate("probe fit is singular".into()))?;
            Ok((s[0], s[1]))
        }
    }
}

/// Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

fn check_increasing(values: &[f64], min: f64, name: &str) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::InvalidParameter(format!("{name} needs at least two values")));
    }
    if values.iter().any(|&x| !(x.is_finite() && x >= min)) {
        return Err(Error::InvalidParameter(format!(
            "{name} values must be finite and >= {min}"
        )));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "{name} values must be strictly increasing"
        )));
    }
    Ok(())
}

/// Share of `∫u²` outside the ball `|x| < r`.
fn tail_fraction(u: &Field, r: f64) -> f64 {
    let g = u.grid();
    let (mut out, mut all) = (0.0, 0.0);
    for (i, v) in u.values().iter().enumerate() {
        let p = g.point(i);
        let w = v * v;
        all += w;
        if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] >= r * r {
            out += w;
        }
    }
    if all > 0.0 {
        out / all
    } else {
        0.0
    }
}

/// `E` along `λ^{3/2} u_i(λx)`, `λ >= 1`. Kinetic and Coulomb terms use the
/// exact scaling `K_m(u_λ) = λK_{m/λ}(u)`, `D(u_λ) = λD(u)`; the potential
/// term samples `V(x/λ)` by interpolation.
pub fn scaling_probe(
    u1: &Field,
    u2: &Field,
    v1: &Field,
    v2: &Field,
    p: &Params,
    lambdas: &[f64],
) -> Result<ProbeReport> {
    p.validate()?;
    let g = *u1.grid();
    for f in [u2, v1, v2] {
        g.ensure_same(f.grid())?;
    }
    check_potential(v1, "V1")?;
    check_potential(v2, "V2")?;
    check_increasing(lambdas, 1.0, "lambda")?;
    let limit = g.n() as f64 / 2.0;
    if let Some(&l) = lambdas.iter().find(|&&l| l > limit) {
        return Err(Error::InvalidParameter(format!(
            "lambda {l} exceeds n/2 = {limit}; the dilated profile would fall below the lattice"
        )));
    }
    for (name, u) in [("u1", u1), ("u2", u2)] {
        let m = u.mass();
        if (m - 1.0).abs() > 1e-8 {
            return Err(Error::Precondition(format!("{name} has mass {m}, expected 1")));
        }
        let tail = tail_fraction(u, g.box_length() / 4.0);
        if tail > 1e-6 {
            return Err(Error::Precondition(format!(
                "{name} carries {tail:e} of its mass outside |x| < L/4"
            )));
        }
    }
    let ops = Operators::new(g);
    let (d11, d22, d12) = ops.hartree_matrix(u1, u2)?;
    let q1 = ops.quarter_laplacian_energy(u1)?;
    let q2 = ops.quarter_laplacian_energy(u2)?;
    let (s1, s2) = (u1.squared(), u2.squared());

    let mut energies = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let spec = KineticSpec::new(p.m / l)?;
        let parts = EnergyParts {
            kinetic1: l * ops.kinetic_energy(u1, spec)?,
            kinetic2: l * ops.kinetic_energy(u2, spec)?,
            quarter1: l * q1,
            quarter2: l * q2,
            potential1: inner_product(&contract_potential(v1, l)?, &s1)?,
            potential2: inner_product(&contract_potential(v2, l)?, &s2)?,
            hartree11: l * d11,
            hartree22: l * d22,
            hartree12: l * d12,
        };
        energies.push(parts.total(p));
    }
    ProbeReport::from_energies("lambda", lambdas.to_vec(), energies)
}

/// `C²` step equal to 1 on `[0, 1/2]` and 0 beyond 1.
fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let t = 2.0 * (1.0 - s);
        t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

/// `Q/‖Q‖` times a smooth cutoff vanishing beyond `radius`, at unit mass.
pub fn concentration_profile(gs: &GroundState, radius: f64) -> Result<Field> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("cutoff radius {radius}")));
    }
    let q = gs.unit_profile();
    let g = *q.grid();
    let vals = q
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let p = g.point(i);
            v * cutoff((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() / radius)
        })
        .collect();
    normalize_mass(&Field::from_values(g, vals)?, 1.0)
}

/// Diameter of the centered ball holding half of `∫Q²`.
fn core_width(gs: &GroundState) -> f64 {
    let g = gs.grid();
    let mut shells: Vec<(f64, f64)> =
        gs.q.values()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let p = g.point(i);
                (p[0] * p[0] + p[1] * p[1] + p[2] * p[2], v * v)
            })
            .collect();
    shells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = shells.iter().map(|s| s.1).sum();
    let mut acc = 0.0;
    for (r2, w) in shells {
        acc += w;
        if acc >= 0.5 * total {
            return 2.0 * r2.sqrt();
        }
    }
    0.0
}

/// `E(ψ_R, ψ_R)` for `ψ_R = A_R R^{3/2} χ(x - x₀) Q̄(R(x - x₀))`, with `χ`
/// a cutoff of radius `L/4` and `A_R` restoring unit mass.
///
/// `ψ_R` is represented on the ground-state lattice contracted by `R` and
/// centered at `x₀`, so the core is equally resolved for every `R`; the
/// potentials are interpolated onto that lattice.
pub fn concentration_probe(
    gs: &GroundState,
    v1: &Field,
    v2: &Field,
    p: &Params,
    x0: [f64; 3],
    r_values: &[f64],
) -> Result<ProbeReport> {
    p.validate()?;
    let gv = *v1.grid();
    gv.ensure_same(v2.grid())?;
    check_potential(v1, "V1")?;
    check_potential(v2, "V2")?;
    check_increasing(r_values, 1.0, "R")?;
    let lv = gv.box_length();
    if x0.iter().any(|c| !(c.abs() <= lv / 4.0)) {
        return Err(Error::Precondition(format!(
            "x0 = {x0:?} must keep a margin of L/4 = {} from the box faces",
            lv / 4.0
        )));
    }
    let gq = *gs.grid();
    let width = core_width(gs);
    if width / gq.spacing() < 4.0 {
        return Err(Error::Precondition(format!(
            "ground-state lattice resolves the core with {:.2} points (< 4)",
            width / gq.spacing()
        )));
    }
    let ops = Operators::new(gq);
    let radius = lv / 4.0;

    let mut energies = Vec::with_capacity(r_values.len());
    for &r in r_values {
        // the cutoff has radius L/4 in x, hence R L/4 on the lattice of Q
        let w = concentration_profile(gs, r * radius)?;
        let spec = KineticSpec::new(p.m / r)?;
        let kin = r * ops.kinetic_energy(&w, spec)?;
        let quarter = r * ops.quarter_laplacian_energy(&w)?;
        let d = r * ops.hartree_energy(&w, &w)?;
        let w2 = w.squared();
        let mats: Vec<Vec<f64>> = (0..3)
            .map(|axis| {
                let t: Vec<f64> = gq.coords().iter().map(|y| x0[axis] + y / r).collect();
                cubic_matrix(&gv, &t)
            })
            .collect();
        let pot = |v: &Field| -> Result<f64> {
            // points beyond the cutoff get extrapolated values but zero weight
            inner_product(&separable_apply(v, gq, &mats[0], &mats[1], &mats[2])?, &w2)
        };
        let parts = EnergyParts {
            kinetic1: kin,
            kinetic2: kin,
            quarter1: quarter,
            quarter2: quarter,
            potential1: pot(v1)?,
            potential2: pot(v2)?,
            hartree11: d,
            hartree22: d,
            hartree12: d,
        };
        energies.push(parts.total(p));
    }
    ProbeReport::from_energies("R", r_values.to_vec(), energies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy_model::total_energy;
    use crate::spectral_field::{sample, Grid3};

    #[test]
    fn solve3_matches_known_system() {
        let a = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let x = [1.0, -2.0, 0.5];
        let b = a.map(|row| row[0] * x[0] + row[1] * x[1] + row[2] * x[2]);
        let s = solve3(a, b).unwrap();
        for i in 0..3 {
            assert!((s[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn fit_recovers_coefficients() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let es: Vec<f64> = xs.iter().map(|x| -0.7 * x + 2.0 + 3.0 / (x * x)).collect();
        let (c, b) = fit(&xs, &es).unwrap();
        assert!((c + 0.7).abs() < 1e-10 && (b - 2.0).abs() < 1e-9);
    }

    fn compact(g: Grid3) -> Field {
        let w = 1.0;
        let u = sample(g, |x| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            (-r * r / (w * w)).exp() * cutoff(r / 3.5)
        })
        .unwrap();
        normalize_mass(&u, 1.0).unwrap()
    }

    #[test]
    fn identity_dilation_is_total_energy() {
        let g = Grid3::new(32, 16.0).unwrap();
        let u = compact(g);
        let v1 = sample(g, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).unwrap();
        let v2 = v1.scaled(0.5);
        let p = Params::new(1.0, 0.7, 0.4, 0.3).unwrap();
        let rep = scaling_probe(&u, &u, &v1, &v2, &p, &[1.0, 2.0]).unwrap();
        let e = total_energy(&Operators::new(g), &u, &u, &v1, &v2, &p).unwrap();
        assert_eq!(rep.energies[0], e);
    }

    #[test]
    fn scaling_probe_rejects_bad_input() {
        let g = Grid3::new(32, 16.0).unwrap();
        let u = compact(g);
        let v = Field::zeros(g);
        let p = Params::new(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(scaling_probe(&u, &u, &v, &v, &p, &[1.0, 17.0]).is_err());
        assert!(scaling_probe(&u, &u, &v, &v, &p, &[2.0, 1.0]).is_err());
        assert!(scaling_probe(&u, &u, &v, &v, &p, &[0.5, 1.0]).is_err());
        let wide = normalize_mass(
            &sample(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 9.0).exp()).unwrap(),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            scaling_probe(&wide, &u, &v, &v, &p, &[1.0, 2.0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn free_probe_scales_linearly() {
        // no interactions, no potential: E(λ) = λ E(1) exactly for m = 0
        let g = Grid3::new(32, 16.0).unwrap();
        let u = compact(g);
        let v = Field::zeros(g);
        let p = Params::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let ls = [1.0, 2.0, 4.0, 8.0, 16.0];
        let rep = scaling_probe(&u, &u, &v, &v, &p, &ls).unwrap();
        for (l, e) in rep.rows() {
            assert!((e - l * rep.energies[0]).abs() < 1e-12 * e);
        }
        assert!(rep.slope > 0.0 && !rep.unbounded_below);
    }
}
