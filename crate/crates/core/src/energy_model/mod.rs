//! The coupled energy, the auxiliary quotient `J` and its infimum `η`,
//! the threshold couplings and the existence classifier.

mod classify;
mod eta;

pub use classify::{classify, Rule, Verdict, VerdictKind, VerdictRecord, STRIP_MARGIN};
pub use eta::{estimate_eta, j_quotient, EtaEstimate, EtaOptions};

use crate::error::{Error, Result};
use crate::nonlocal_operators::{KineticSpec, Operators};
use crate::spectral_field::{inner_product, Field};

/// Model coefficients `(a₁, a₂, β, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub a1: f64,
    pub a2: f64,
    pub beta: f64,
    pub m: f64,
}

impl Params {
    pub fn new(a1: f64, a2: f64, beta: f64, m: f64) -> Result<Self> {
        let p = Self { a1, a2, beta, m };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a1", self.a1), ("a2", self.a2), ("beta", self.beta), ("m", self.m)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} is not finite")));
            }
        }
        if self.a1 < 0.0 || self.a2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "couplings must be nonnegative (a1 = {}, a2 = {})",
                self.a1, self.a2
            )));
        }
        if self.m < 0.0 {
            return Err(Error::InvalidParameter(format!("mass m = {} is negative", self.m)));
        }
        Ok(())
    }

    pub fn beta_plus(&self) -> f64 {
        self.beta.max(0.0)
    }

    pub fn kinetic(&self) -> Result<KineticSpec> {
        KineticSpec::new(self.m)
    }
}

/// Threshold couplings for given `(a₁, a₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub a_star: f64,
    /// `sqrt((a* - a₁)(a* - a₂))`, `None` when the radicand is negative.
    pub beta_low: Option<f64>,
    /// `(a* - a₁)/2 + (a* - a₂)/2`
    pub beta_high: f64,
}

pub fn thresholds(a1: f64, a2: f64, a_star: f64) -> Result<Thresholds> {
    if !(a_star.is_finite() && a_star > 0.0) {
        return Err(Error::InvalidParameter(format!("a* = {a_star} must be positive")));
    }
    let rad = (a_star - a1) * (a_star - a2);
    Ok(Thresholds {
        a_star,
        beta_low: (rad >= 0.0).then(|| rad.sqrt()),
        beta_high: 0.5 * (a_star - a1) + 0.5 * (a_star - a2),
    })
}

/// `γ(t) = a*(1 + t²) / (a₁ + a₂t² + 2β⁺t)`.
pub fn gamma(t: f64, p: &Params, a_star: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("t = {t} must be positive")));
    }
    let den = p.a1 + p.a2 * t * t + 2.0 * p.beta_plus() * t;
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!("gamma denominator {den} at t = {t}")));
    }
    Ok(a_star * (1.0 + t * t) / den)
}

/// Analytic bracket `a*/max(a₁+β⁺, a₂+β⁺) <= η <= 2a*/(a₁+a₂+2β⁺)`.
pub fn eta_bounds(p: &Params, a_star: f64) -> Result<(f64, f64)> {
    let bp = p.beta_plus();
    if p.a1 + p.a2 + bp == 0.0 {
        return Err(Error::InvalidParameter(
            "eta is undefined when a1 = a2 = beta+ = 0".into(),
        ));
    }
    let lower = a_star / (p.a1 + bp).max(p.a2 + bp);
    let upper = 2.0 * a_star / (p.a1 + p.a2 + 2.0 * bp);
    Ok((lower, upper))
}

/// The integrals making up the energy of a pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    pub kinetic1: f64,
    pub kinetic2: f64,
    pub quarter1: f64,
    pub quarter2: f64,
    pub potential1: f64,
    pub potential2: f64,
    pub hartree11: f64,
    pub hartree22: f64,
    pub hartree12: f64,
}

impl EnergyParts {
    pub fn total(&self, p: &Params) -> f64 {
        self.kinetic1 + self.potential1 + self.kinetic2 + self.potential2
            - 0.5 * p.a1 * self.hartree11
            - 0.5 * p.a2 * self.hartree22
            - p.beta * self.hartree12
    }
}

/// Checks that a potential is finite and nonnegative on the grid.
pub fn check_potential(v: &Field, name: &str) -> Result<()> {
    v.ensure_finite(name)?;
    if let Some(pos) = v.values().iter().position(|&x| x < 0.0) {
        let pt = v.grid().point(pos);
        return Err(Error::InvalidParameter(format!(
            "{name} is negative ({}) at ({}, {}, {})",
            v.values()[pos],
            pt[0],
            pt[1],
            pt[2]
        )));
    }
    Ok(())
}

pub fn energy_parts(
    ops: &Operators,
    u1: &Field,
    u2: &Field,
    v1: &Field,
    v2: &Field,
    p: &Params,
) -> Result<EnergyParts> {
    p.validate()?;
    for f in [u2, v1, v2] {
        u1.grid().ensure_same(f.grid())?;
    }
    check_potential(v1, "V1")?;
    check_potential(v2, "V2")?;
    let spec = p.kinetic()?;
    let t1 = ops.terms(u1, spec)?;
    let t2 = ops.terms(u2, spec)?;
    Ok(EnergyParts {
        kinetic1: t1.kinetic,
        kinetic2: t2.kinetic,
        quarter1: t1.quarter,
        quarter2: t2.quarter,
        potential1: inner_product(v1, &u1.squared())?,
        potential2: inner_product(v2, &u2.squared())?,
        hartree11: t1.hartree,
        hartree22: t2.hartree,
        hartree12: ops.coulomb_pairing(&t1.rho, &t2.rho),
    })
}

/// `E(u₁, u₂)` for potentials `V₁, V₂ >= 0`.
pub fn total_energy(ops: &Operators, u1: &Field, u2: &Field, v1: &Field, v2: &Field, p: &Params) -> Result<f64> {
    Ok(energy_parts(ops, u1, u2, v1, v2, p)?.total(p))
}

/// One-component energy `(sqrt(-Δ+m²)u, u) + ∫V u² - (a/2) D(u,u)`.
pub fn single_energy(ops: &Operators, u: &Field, v: &Field, a: f64, m: f64) -> Result<f64> {
    check_potential(v, "V")?;
    let t = ops.terms(u, KineticSpec::new(m)?)?;
    Ok(t.kinetic + inner_product(v, &u.squared())? - 0.5 * a * t.hartree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::{normalize_mass, sample, Grid3};
    use proptest::prelude::*;

    const A: f64 = 2.7;

    #[test]
    fn thresholds_examples() {
        let t = thresholds(1.0, 1.0, A).unwrap();
        assert!((t.beta_low.unwrap() - (A - 1.0)).abs() < 1e-15);
        assert!((t.beta_high - (A - 1.0)).abs() < 1e-15);
        let t = thresholds(0.0, A, A).unwrap();
        assert_eq!(t.beta_low, Some(0.0));
        assert_eq!(t.beta_high, A / 2.0);
        let t = thresholds(1.1 * A, 0.5 * A, A).unwrap();
        assert_eq!(t.beta_low, None);
        assert!(thresholds(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let a = 1.2;
        let p = Params::new(a, a, A - a, 0.0).unwrap();
        assert!((gamma(1.0, &p, A).unwrap() - 1.0).abs() < 1e-15);
        assert!(gamma(0.0, &p, A).is_err());
        assert!(gamma(-1.0, &p, A).is_err());
    }

    #[test]
    fn eta_bound_examples() {
        let (lo, hi) = eta_bounds(&Params::new(A / 2.0, A / 2.0, 0.0, 0.0).unwrap(), A).unwrap();
        assert!((lo - 2.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
        let (_, hi) = eta_bounds(&Params::new(A, A, 0.0, 0.0).unwrap(), A).unwrap();
        assert!((hi - 1.0).abs() < 1e-15);
        let (lo, hi) = eta_bounds(&Params::new(1.0, 1.0, A - 1.0, 0.0).unwrap(), A).unwrap();
        assert!((hi - 1.0).abs() < 1e-15 && (lo - 1.0).abs() < 1e-15);
        // negative beta reduces to beta = 0
        let b0 = eta_bounds(&Params::new(0.4, 0.9, 0.0, 0.0).unwrap(), A).unwrap();
        let bn = eta_bounds(&Params::new(0.4, 0.9, -3.0, 0.0).unwrap(), A).unwrap();
        assert_eq!(b0, bn);
        assert!(eta_bounds(&Params::new(0.0, 0.0, -1.0, 0.0).unwrap(), A).is_err());
    }

    proptest! {
        #[test]
        fn gamma_at_beta_low(x1 in 0.01f64..0.99, x2 in 0.01f64..0.99) {
            let (a1, a2) = (x1 * A, x2 * A);
            let bl = thresholds(a1, a2, A).unwrap().beta_low.unwrap();
            let p = Params::new(a1, a2, bl, 0.0).unwrap();
            let t0 = ((A - a1) / (A - a2)).sqrt();
            prop_assert!((gamma(t0, &p, A).unwrap() - 1.0).abs() < 1e-12);
            for i in 0..=40 {
                let t = 10f64.powf(-2.0 + 0.1 * i as f64);
                prop_assert!(gamma(t, &p, A).unwrap() >= 1.0 - 1e-12);
            }
        }

        #[test]
        fn beta_low_below_beta_high(x1 in 0.01f64..0.99, x2 in 0.01f64..0.99) {
            let t = thresholds(x1 * A, x2 * A, A).unwrap();
            prop_assert!(t.beta_low.unwrap() <= t.beta_high * (1.0 + 1e-15));
        }

        #[test]
        fn bounds_are_ordered(a1 in 0.0f64..5.0, a2 in 0.0f64..5.0, b in -2.0f64..5.0) {
            prop_assume!(a1 + a2 + b.max(0.0) > 1e-6);
            let (lo, hi) = eta_bounds(&Params::new(a1, a2, b, 0.0).unwrap(), A).unwrap();
            prop_assert!(lo <= hi * (1.0 + 1e-14));
        }
    }

    #[test]
    fn energy_is_additive_and_monotone_in_beta() {
        let g = Grid3::new(32, 12.0).unwrap();
        let ops = Operators::new(g);
        let u = normalize_mass(
            &sample(g, |p| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 2.0).exp()).unwrap(),
            1.0,
        )
        .unwrap();
        let v = normalize_mass(
            &sample(g, |p| (-((p[0] - 1.0).powi(2) + p[1] * p[1] + p[2] * p[2]) / 3.0).exp()).unwrap(),
            1.0,
        )
        .unwrap();
        let zero = Field::zeros(g);
        let p = Params::new(1.0, 1.0, 0.0, 0.5).unwrap();
        let e = total_energy(&ops, &u, &v, &zero, &zero, &p).unwrap();
        let s = single_energy(&ops, &u, &zero, 1.0, 0.5).unwrap() + single_energy(&ops, &v, &zero, 1.0, 0.5).unwrap();
        assert!((e - s).abs() < 1e-12 * s.abs().max(1.0));
        let mut last = f64::INFINITY;
        for b in [-1.0, 0.0, 0.5, 1.0] {
            let e = total_energy(&ops, &u, &v, &zero, &zero, &Params { beta: b, ..p }).unwrap();
            assert!(e < last);
            last = e;
        }
        let neg = Field::constant(g, -1.0);
        assert!(total_energy(&ops, &u, &v, &neg, &zero, &p).is_err());
    }
}
