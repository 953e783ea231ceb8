use rayon::prelude::*;

use super::{eta_bounds, Params};
use crate::error::{Error, Result};
use crate::ground_state::descent::{balance_to, constrained_direction};
use crate::ground_state::GroundState;
use crate::nonlocal_operators::{FieldTerms, KineticSpec, Operators};
use crate::spectral_field::resample::{dilate, resample, translate};
use crate::spectral_field::{normalize_mass, sample, Field, Grid3};

/// `J(u₁,u₂) = 2(T₁+T₂) / (a₁D₁₁ + a₂D₂₂ + 2β⁺D₁₂)` for unit-mass fields.
pub fn j_quotient(ops: &Operators, u1: &Field, u2: &Field, p: &Params) -> Result<f64> {
    for (name, u) in [("u1", u1), ("u2", u2)] {
        let m = u.mass();
        if (m - 1.0).abs() > 1e-8 {
            return Err(Error::Precondition(format!("{name} has mass {m}, expected 1")));
        }
    }
    let t1 = ops.terms(u1, KineticSpec::massless())?;
    let t2 = ops.terms(u2, KineticSpec::massless())?;
    Ok(JState::new(ops, &t1, &t2, p)?.j)
}

struct JState {
    j: f64,
    den: f64,
}

impl JState {
    fn new(ops: &Operators, t1: &FieldTerms, t2: &FieldTerms, p: &Params) -> Result<Self> {
        let d12 = ops.coulomb_pairing(&t1.rho, &t2.rho);
        let den = p.a1 * t1.hartree + p.a2 * t2.hartree + 2.0 * p.beta_plus() * d12;
        if !(den > 0.0) {
            return Err(Error::Degenerate(format!("J denominator {den} is not positive")));
        }
        Ok(Self {
            j: 2.0 * (t1.quarter + t2.quarter) / den,
            den,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaOptions {
    /// Projected descent steps applied to the best trial pair.
    pub refine_iters: usize,
    /// Relative change of `J` that ends the refinement.
    pub tol: f64,
    /// Dilation ratios of one component against the other in the trial
    /// family. Ratios far from 1 push one profile toward the lattice or the
    /// box scale, where both `T` and `D` lose accuracy.
    pub dilation_ratios: Vec<f64>,
}

impl Default for EtaOptions {
    fn default() -> Self {
        Self {
            refine_iters: 150,
            tol: 1e-9,
            dilation_ratios: vec![0.8, 0.9, 1.12, 1.25],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Label of the trial pair the refinement started from.
    pub best_trial: String,
    /// `J` for every trial pair before refinement.
    pub trials: Vec<(String, f64)>,
    pub refine_iterations: usize,
}

/// Upper approximation of `η` by minimizing `J` over a trial family and
/// refining the best pair by projected descent.
pub fn estimate_eta(p: &Params, gs: &GroundState, grid: Grid3, opts: &EtaOptions) -> Result<EtaEstimate> {
    p.validate()?;
    let (lower, upper) = eta_bounds(p, gs.a_star)?;
    let ops = Operators::new(grid);
    let qbar = if gs.grid() == &grid {
        gs.unit_profile()
    } else {
        normalize_mass(&resample(&gs.unit_profile(), grid)?, 1.0)?
    };
    // β < 0 enters only through β⁺
    let p = Params {
        beta: p.beta_plus(),
        ..*p
    };

    let mut pairs: Vec<(String, Field, Field)> = vec![("Q/Q".into(), qbar.clone(), qbar.clone())];
    for &r in &opts.dilation_ratios {
        let d = normalize_mass(&dilate(&qbar, r)?, 1.0)?;
        pairs.push((format!("Q/Q({r})"), qbar.clone(), d.clone()));
        pairs.push((format!("Q({r})/Q"), d, qbar.clone()));
    }
    let w = 1.5;
    let gauss = normalize_mass(
        &sample(grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (w * w)).exp())?,
        1.0,
    )?;
    pairs.push(("gauss/gauss".into(), gauss.clone(), gauss));
    let shifted = translate(&qbar, [1.5, 0.0, 0.0])?;
    pairs.push(("Q/Q-shifted".into(), qbar.clone(), normalize_mass(&shifted, 1.0)?));

    let values: Vec<Result<f64>> = pairs.par_iter().map(|(_, a, b)| j_quotient(&ops, a, b, &p)).collect();
    let mut trials = Vec::with_capacity(pairs.len());
    let mut best = 0;
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        trials.push((pairs[i].0.clone(), v));
        if v < trials[best].1 {
            best = i;
        }
    }
    let (label, u1, u2) = pairs.swap_remove(best);
    let (estimate, refine_iterations) = refine(&ops, u1, u2, &p, opts)?;

    if estimate < lower * 0.99 || estimate > upper * 1.01 {
        return Err(Error::OutsideBounds { estimate, lower, upper });
    }
    Ok(EtaEstimate {
        estimate,
        lower,
        upper,
        best_trial: label,
        trials,
        refine_iterations,
    })
}

/// Projected descent on `J` with each component's mass and quarter energy
/// held fixed. `J` is invariant only under a common dilation, so this
/// explores every direction except the relative scale, which the trial
/// family covers. Fixing the scales also keeps the descent away from
/// spread-out fields, whose quarter energy the periodic box underestimates.
fn refine(ops: &Operators, mut u1: Field, mut u2: Field, p: &Params, opts: &EtaOptions) -> Result<(f64, usize)> {
    let spec = KineticSpec::massless();
    let mut t1 = ops.terms(&u1, spec)?;
    let mut t2 = ops.terms(&u2, spec)?;
    let (r1, r2) = (t1.quarter, t2.quarter);
    let mut st = JState::new(ops, &t1, &t2, p)?;
    let mut step: f64 = 0.5;
    let bp = p.beta_plus();

    for it in 0..opts.refine_iters {
        let j = st.j;
        let grad = |u: &Field, t: &FieldTerms, other: &FieldTerms, a: f64| -> Result<Field> {
            let vals = t
                .kinetic_u
                .values()
                .iter()
                .zip(u.values())
                .zip(t.phi.values().iter().zip(other.phi.values()))
                .map(|((ku, uu), (ps, po))| 4.0 * (ku - j * (a * ps + bp * po) * uu) / st.den)
                .collect();
            Field::from_values(*u.grid(), vals)
        };
        let g1 = grad(&u1, &t1, &t2, p.a1)?;
        let g2 = grad(&u2, &t2, &t1, p.a2)?;
        let d1 = constrained_direction(ops, &u1, &g1)?;
        let d2 = constrained_direction(ops, &u2, &g2)?;
        let slope = d1.slope + d2.slope;
        if !(slope > 0.0) {
            return Ok((j, it));
        }
        let mut accepted = None;
        while step > 1e-12 {
            let n1 = balance_to(ops, &u1.axpy(step, &d1.d)?, r1)?;
            let n2 = balance_to(ops, &u2.axpy(step, &d2.d)?, r2)?;
            let nt1 = ops.terms(&n1, spec)?;
            let nt2 = ops.terms(&n2, spec)?;
            let ns = JState::new(ops, &nt1, &nt2, p)?;
            if ns.j <= j - 1e-4 * step * slope {
                accepted = Some((n1, n2, nt1, nt2, ns));
                break;
            }
            step *= 0.5;
        }
        let Some((n1, n2, nt1, nt2, ns)) = accepted else {
            return Ok((j, it));
        };
        let change = (j - ns.j) / j;
        u1 = n1;
        u2 = n2;
        t1 = nt1;
        t2 = nt2;
        st = ns;
        step = (2.0 * step).min(16.0);
        if change < opts.tol {
            return Ok((st.j, it + 1));
        }
    }
    Ok((st.j, opts.refine_iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::Grid3;

    fn blob(g: Grid3, c: f64, w: f64) -> Field {
        normalize_mass(
            &sample(g, |x| {
                (-((x[0] - c).powi(2) + x[1] * x[1] + x[2] * x[2]) / (w * w)).exp()
            })
            .unwrap(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn j_ignores_negative_beta() {
        let g = Grid3::new(32, 16.0).unwrap();
        let ops = Operators::new(g);
        let (u, v) = (blob(g, 0.0, 1.5), blob(g, 1.0, 2.0));
        let j0 = j_quotient(&ops, &u, &v, &Params::new(1.0, 2.0, 0.0, 0.0).unwrap()).unwrap();
        let jn = j_quotient(&ops, &u, &v, &Params::new(1.0, 2.0, -4.0, 0.0).unwrap()).unwrap();
        assert_eq!(j0, jn);
    }

    #[test]
    fn j_rejects_bad_input() {
        let g = Grid3::new(32, 16.0).unwrap();
        let ops = Operators::new(g);
        let u = blob(g, 0.0, 1.5);
        assert!(matches!(
            j_quotient(&ops, &u.scaled(2.0), &u, &Params::new(1.0, 1.0, 0.0, 0.0).unwrap()),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            j_quotient(&ops, &u, &u, &Params::new(0.0, 0.0, -1.0, 0.0).unwrap()),
            Err(Error::Degenerate(_))
        ));
    }
}
