//! Minimization of the coupled energy over pairs of unit-mass fields,
//! Lagrange multipliers, and probes of the regimes without minimizers.

mod flow;
mod probes;
mod result;

pub use flow::{gaussian_seed, minimize, minimize_single, MinimizeOptions, SingleResult, TraceEntry};
pub use probes::{concentration_probe, concentration_profile, scaling_probe, ProbeReport};
pub use result::MinimizerResult;

use crate::energy_model::{check_potential, Params};
use crate::error::{Error, Result};
use crate::nonlocal_operators::Operators;
use crate::spectral_field::{inner_product, Field};

fn ensure_unit(u: &Field, name: &str) -> Result<()> {
    let m = u.mass();
    if (m - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("{name} has mass {m}, expected 1")));
    }
    Ok(())
}

/// `μ₁ = K(u₁) + ∫V₁u₁² - a₁D(u₁,u₁) - βD(u₂,u₁)` and its mirror image.
pub fn lagrange_multipliers(
    ops: &Operators,
    u1: &Field,
    u2: &Field,
    v1: &Field,
    v2: &Field,
    p: &Params,
) -> Result<(f64, f64)> {
    ensure_unit(u1, "u1")?;
    ensure_unit(u2, "u2")?;
    let parts = crate::energy_model::energy_parts(ops, u1, u2, v1, v2, p)?;
    let mu1 = parts.kinetic1 + parts.potential1 - p.a1 * parts.hartree11 - p.beta * parts.hartree12;
    let mu2 = parts.kinetic2 + parts.potential2 - p.a2 * parts.hartree22 - p.beta * parts.hartree12;
    Ok((mu1, mu2))
}

/// `H₁u₁ = sqrt(-Δ+m²)u₁ + V₁u₁ - a₁φ₁u₁ - βφ₂u₁` and the mirror image.
pub fn el_operators(
    ops: &Operators,
    u1: &Field,
    u2: &Field,
    v1: &Field,
    v2: &Field,
    p: &Params,
) -> Result<(Field, Field)> {
    check_potential(v1, "V1")?;
    check_potential(v2, "V2")?;
    let spec = p.kinetic()?;
    let phi1 = ops.coulomb_potential(u1)?;
    let phi2 = ops.coulomb_potential(u2)?;
    let apply = |u: &Field, v: &Field, a: f64, own: &Field, other: &Field| -> Result<Field> {
        let ku = ops.apply_kinetic(u, spec)?;
        let vals = ku
            .values()
            .iter()
            .zip(u.values())
            .zip(v.values())
            .zip(own.values().iter().zip(other.values()))
            .map(|(((k, x), v), (po, pt))| k + (v - a * po - p.beta * pt) * x)
            .collect();
        Field::from_values(*u.grid(), vals)
    };
    Ok((apply(u1, v1, p.a1, &phi1, &phi2)?, apply(u2, v2, p.a2, &phi2, &phi1)?))
}

/// Multipliers as Rayleigh quotients `<u, Hu> / <u, u>` of the
/// Euler-Lagrange operators, evaluated in physical space.
pub fn rayleigh_multipliers(
    ops: &Operators,
    u1: &Field,
    u2: &Field,
    v1: &Field,
    v2: &Field,
    p: &Params,
) -> Result<(f64, f64)> {
    let (h1, h2) = el_operators(ops, u1, u2, v1, v2, p)?;
    Ok((inner_product(u1, &h1)? / u1.mass(), inner_product(u2, &h2)? / u2.mass()))
}

/// `‖H₁u₁ - μ₁u₁‖` and `‖H₂u₂ - μ₂u₂‖` with the formula multipliers.
pub fn el_residuals(ops: &Operators, u1: &Field, u2: &Field, v1: &Field, v2: &Field, p: &Params) -> Result<(f64, f64)> {
    let (mu1, mu2) = lagrange_multipliers(ops, u1, u2, v1, v2, p)?;
    let (h1, h2) = el_operators(ops, u1, u2, v1, v2, p)?;
    Ok((h1.axpy(-mu1, u1)?.l2_norm(), h2.axpy(-mu2, u2)?.l2_norm()))
}

/// Relative defect of the Pohozaev identity of the free coupled system
/// with `m = 0`:
/// `T(u) + T(v) + (3/2)(M(u) + M(v)) = (5/4)(aD(u,u) + aD(v,v) + 2βD(u,v))`.
/// Returns 0 when both sides vanish.
pub fn pohozaev_coupled_residual(ops: &Operators, u: &Field, v: &Field, a: f64, beta: f64) -> Result<f64> {
    u.ensure_finite("u")?;
    v.ensure_finite("v")?;
    let (duu, dvv, duv) = ops.hartree_matrix(u, v)?;
    let lhs = ops.quarter_laplacian_energy(u)? + ops.quarter_laplacian_energy(v)? + 1.5 * (u.mass() + v.mass());
    let rhs = 1.25 * (a * duu + a * dvv + 2.0 * beta * duv);
    let scale = lhs.abs() + rhs.abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).abs() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::{normalize_mass, sample, Grid3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (Operators, Field, Field, Field, Field) {
        let g = Grid3::new(32, 12.0).unwrap();
        let ops = Operators::new(g);
        let u1 = normalize_mass(
            &sample(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()).unwrap(),
            1.0,
        )
        .unwrap();
        let u2 = normalize_mass(
            &sample(g, |x| (-((x[0] - 0.5).powi(2) + x[1] * x[1] + x[2] * x[2]) / 3.0).exp()).unwrap(),
            1.0,
        )
        .unwrap();
        let v1 = sample(g, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).unwrap();
        let v2 = sample(g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]) + x[2] * x[2]).unwrap();
        (ops, u1, u2, v1, v2)
    }

    #[test]
    fn multiplier_paths_agree() {
        let (ops, u1, u2, v1, v2) = setup();
        for p in [
            Params::new(1.0, 0.5, 0.3, 0.0).unwrap(),
            Params::new(0.2, 1.5, -0.7, 1.3).unwrap(),
        ] {
            let (a, b) = lagrange_multipliers(&ops, &u1, &u2, &v1, &v2, &p).unwrap();
            let (c, d) = rayleigh_multipliers(&ops, &u1, &u2, &v1, &v2, &p).unwrap();
            assert!((a - c).abs() < 1e-10 * a.abs().max(1.0), "{a} {c}");
            assert!((b - d).abs() < 1e-10 * b.abs().max(1.0), "{b} {d}");
        }
    }

    #[test]
    fn decoupled_multiplier_is_single() {
        let (ops, u1, u2, v1, v2) = setup();
        let p = Params::new(1.0, 0.5, 0.0, 0.4).unwrap();
        let (mu1, _) = lagrange_multipliers(&ops, &u1, &u2, &v1, &v2, &p).unwrap();
        let spec = p.kinetic().unwrap();
        let single = ops.kinetic_energy(&u1, spec).unwrap() + inner_product(&v1, &u1.squared()).unwrap()
            - ops.hartree_energy(&u1, &u1).unwrap();
        assert!((mu1 - single).abs() < 1e-12);
    }

    #[test]
    fn multipliers_need_unit_mass() {
        let (ops, u1, u2, v1, v2) = setup();
        let p = Params::new(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            lagrange_multipliers(&ops, &u1.scaled(1.1), &u2, &v1, &v2, &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn pohozaev_guards_zero_and_flags_random_fields() {
        let (ops, ..) = setup();
        let g = *ops.grid();
        let z = Field::zeros(g);
        assert_eq!(pohozaev_coupled_residual(&ops, &z, &z, 1.0, 1.0).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let c: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let w = rng.gen_range(0.8..2.0);
            let amp = rng.gen_range(0.2..3.0);
            let u = sample(g, |x| {
                amp * (-((x[0] - c[0]).powi(2) + x[1] * x[1] + (x[2] - c[2]).powi(2)) / (w * w)).exp()
            })
            .unwrap();
            let v = sample(g, |x| {
                (-((x[0] + c[1]).powi(2) + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()
            })
            .unwrap();
            assert!(pohozaev_coupled_residual(&ops, &u, &v, 1.0, 0.5).unwrap() > 1e-2);
        }
    }
}
