use crate::error::{Error, Result};
use crate::nonlocal_operators::{FieldTerms, KineticSpec, Operators};
use crate::spectral_field::Field;

/// The three integrals entering the Weinstein quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeinsteinParts {
    pub quarter: f64,
    pub mass: f64,
    pub hartree: f64,
}

impl WeinsteinParts {
    pub fn from_terms(t: &FieldTerms) -> Self {
        Self {
            quarter: t.quarter,
            mass: t.mass,
            hartree: t.hartree,
        }
    }

    /// `T M / D`.
    pub fn quotient(&self) -> Result<f64> {
        if !(self.hartree > 0.0) {
            return Err(Error::Degenerate(format!(
                "Hartree energy {} is not positive",
                self.hartree
            )));
        }
        Ok(self.quarter * self.mass / self.hartree)
    }
}

/// `‖(-Δ)^{1/4}u‖² ‖u‖² / D(u,u)`; its infimum is `a*/2`.
pub fn weinstein_quotient(ops: &Operators, u: &Field) -> Result<f64> {
    let t = ops.terms(u, KineticSpec::massless())?;
    WeinsteinParts::from_terms(&t).quotient()
}

pub(crate) fn gradient_from_terms(u: &Field, t: &FieldTerms, p: &WeinsteinParts) -> Result<Field> {
    let w = p.quotient()?;
    let a = 2.0 * w / p.quarter;
    let b = 2.0 * w / p.mass;
    let c = 4.0 * w / p.hartree;
    let vals = t
        .kinetic_u
        .values()
        .iter()
        .zip(u.values())
        .zip(t.phi.values())
        .map(|((ku, uu), ph)| a * ku + b * uu - c * ph * uu)
        .collect();
    Field::from_values(*u.grid(), vals)
}

/// L² gradient of the quotient.
pub fn weinstein_gradient(ops: &Operators, u: &Field) -> Result<Field> {
    let t = ops.terms(u, KineticSpec::massless())?;
    gradient_from_terms(u, &t, &WeinsteinParts::from_terms(&t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::resample::dilate;
    use crate::spectral_field::{inner_product, sample, Grid3};

    fn blob(g: Grid3) -> Field {
        sample(g, |p| {
            let r2 = p[0] * p[0] + 1.3 * p[1] * p[1] + 0.8 * p[2] * p[2];
            (-r2 / 2.0).exp() * (1.0 + 0.2 * p[0])
        })
        .unwrap()
    }

    #[test]
    fn homogeneous_of_degree_zero() {
        let g = Grid3::new(32, 16.0).unwrap();
        let ops = Operators::new(g);
        let u = blob(g);
        let w = weinstein_quotient(&ops, &u).unwrap();
        let w3 = weinstein_quotient(&ops, &u.scaled(3.0)).unwrap();
        assert!((w - w3).abs() < 1e-13 * w);
    }

    #[test]
    fn invariant_under_dilation() {
        // the periodic quarter energy of a spread field is slightly low, so
        // the resampled check is limited by the box
        let g = Grid3::new(64, 32.0).unwrap();
        let ops = Operators::new(g);
        let u = blob(g);
        let w = weinstein_quotient(&ops, &u).unwrap();
        let wd = weinstein_quotient(&ops, &dilate(&u, 1.25).unwrap()).unwrap();
        assert!((w - wd).abs() < 2e-4 * w, "{w} {wd}");
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let g = Grid3::new(32, 12.0).unwrap();
        let ops = Operators::new(g);
        let u = blob(g);
        let dir = sample(g, |p| {
            (-(p[0] - 0.5).powi(2) - p[1] * p[1] - (p[2] + 0.3).powi(2)).exp()
        })
        .unwrap();
        let grad = weinstein_gradient(&ops, &u).unwrap();
        let eps = 1e-5;
        let wp = weinstein_quotient(&ops, &u.axpy(eps, &dir).unwrap()).unwrap();
        let wm = weinstein_quotient(&ops, &u.axpy(-eps, &dir).unwrap()).unwrap();
        let fd = (wp - wm) / (2.0 * eps);
        let an = inner_product(&grad, &dir).unwrap();
        assert!((fd - an).abs() < 1e-7 * an.abs().max(1.0), "{fd} vs {an}");
    }

    #[test]
    fn zero_field_is_degenerate() {
        let g = Grid3::new(16, 8.0).unwrap();
        let ops = Operators::new(g);
        assert!(matches!(
            weinstein_quotient(&ops, &Field::zeros(g)),
            Err(Error::Degenerate(_))
        ));
    }
}
