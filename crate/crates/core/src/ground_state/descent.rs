use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::quotient::{gradient_from_terms, WeinsteinParts};
use super::GroundStateOptions;
use crate::error::{Error, Result};
use crate::nonlocal_operators::{KineticSpec, Operators};
use crate::spectral_field::{normalize_mass, Field};

pub(crate) struct Direction {
    /// Preconditioned descent direction.
    pub d: Field,
    /// `-<g, d>`, positive away from stationarity.
    pub slope: f64,
    /// L² norm of the projected gradient.
    pub residual_norm: f64,
}

/// Steepest-descent direction for gradient `g` at `u`, preconditioned by
/// `(1 + |k|)⁻¹` and tangent to `{‖u‖² = c₁, ‖(-Δ)^{1/4}u‖² = c₂}`: the
/// components along `u` and `sqrt(-Δ)u` are removed in the preconditioned
/// metric.
pub(crate) fn constrained_direction(ops: &Operators, u: &Field, g: &Field) -> Result<Direction> {
    let p = ops.parseval_factor();
    let k = ops.wavenumbers();
    let fft = ops.fft();
    let uh = fft.forward_real(u);
    let gh = fft.forward_real(g);
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((uc, gc), &kk) in uh.iter().zip(&gh).zip(k) {
        let pw = 1.0 / (1.0 + kk);
        let uu = uc.norm_sqr();
        let gu = gc.re * uc.re + gc.im * uc.im;
        a11 += pw * uu;
        a12 += pw * kk * uu;
        a22 += pw * kk * kk * uu;
        b1 += pw * gu;
        b2 += pw * kk * gu;
    }
    let det = a11 * a22 - a12 * a12;
    let (alpha, beta) = if det.abs() > 1e-300 {
        ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
    } else {
        (b1 / a11, 0.0)
    };
    let rh: Vec<Complex64> = uh
        .iter()
        .zip(&gh)
        .zip(k)
        .map(|((uc, gc), &kk)| gc - uc * (alpha + beta * kk))
        .collect();
    let residual_norm = (rh.iter().map(|c| c.norm_sqr()).sum::<f64>() * p).sqrt();
    let slope = rh.iter().zip(k).map(|(c, &kk)| c.norm_sqr() / (1.0 + kk)).sum::<f64>() * p;
    let dh: Vec<Complex64> = rh.iter().zip(k).map(|(c, &kk)| -c / (1.0 + kk)).collect();
    Ok(Direction {
        d: fft.inverse_real(dh)?,
        slope,
        residual_norm,
    })
}

pub(super) struct Descent {
    pub u: Field,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// Maps `u` onto `{‖u‖² = 1, ‖(-Δ)^{1/4}u‖² = 1}` with the filter
/// `e^{-s|k|}`, `s` found by Newton's method on `log(T/M)`.
pub(super) fn balance(ops: &Operators, u: &Field) -> Result<Field> {
    balance_to(ops, u, 1.0)
}

/// As [`balance`] with `‖(-Δ)^{1/4}u‖² = ratio`.
pub(crate) fn balance_to(ops: &Operators, u: &Field, ratio: f64) -> Result<Field> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("balance ratio {ratio}")));
    }
    let target = ratio.ln();
    let fft = ops.fft();
    let mut hat = fft.forward_real(u);
    let k = ops.wavenumbers();
    let power: Vec<f64> = hat.iter().map(|c| c.norm_sqr()).collect();
    let mut s = 0.0f64;
    for _ in 0..60 {
        let (mut w0, mut w1, mut w2) = (0.0, 0.0, 0.0);
        for (&p, &k) in power.iter().zip(k) {
            let w = p * (-2.0 * s * k).exp();
            w0 += w;
            w1 += w * k;
            w2 += w * k * k;
        }
        if !(w1 > 0.0) {
            return Err(Error::Degenerate("field has no nonzero frequencies".into()));
        }
        let f = (w1 / w0).ln() - target;
        if f.abs() < 1e-15 {
            break;
        }
        let df = -2.0 * (w2 / w1 - w1 / w0);
        let ds = (-f / df).clamp(-0.25, 0.25);
        s += ds;
    }
    if s != 0.0 {
        hat.par_iter_mut()
            .zip(k.par_iter())
            .for_each(|(c, &k)| *c *= (-s * k).exp());
    }
    normalize_mass(&fft.inverse_real(hat)?, 1.0)
}

/// Steepest descent on the quotient, preconditioned by `(1 + |k|)⁻¹` and
/// projected onto the tangent space of the balanced set.
pub(super) fn descend(ops: &Operators, u0: Field, opts: &GroundStateOptions) -> Result<Descent> {
    const ARMIJO: f64 = 1e-4;
    let mut u = u0;
    let mut t = ops.terms(&u, KineticSpec::massless())?;
    let mut w = WeinsteinParts::from_terms(&t).quotient()?;
    let mut trace = vec![w];
    let mut step: f64 = 1.0;
    let mut last_change = f64::INFINITY;
    let mut residual = f64::INFINITY;

    for it in 0..=opts.max_iter {
        let parts = WeinsteinParts::from_terms(&t);
        let g = gradient_from_terms(&u, &t, &parts)?;
        let dir = constrained_direction(ops, &u, &g)?;
        residual = dir.residual_norm * parts.mass / (2.0 * w) / u.l2_norm();
        if last_change < opts.tol && residual < opts.el_tol {
            return Ok(Descent {
                u,
                iterations: it,
                trace,
            });
        }
        if it == opts.max_iter {
            break;
        }
        let slope = dir.slope;
        if !(slope > 0.0) {
            return Ok(Descent {
                u,
                iterations: it,
                trace,
            });
        }
        let d = dir.d;

        let mut accepted = None;
        while step > 1e-14 {
            let trial = balance(ops, &u.axpy(step, &d)?)?;
            let tt = ops.terms(&trial, KineticSpec::massless())?;
            let wt = WeinsteinParts::from_terms(&tt).quotient()?;
            if wt <= w - ARMIJO * step * slope {
                accepted = Some((trial, tt, wt));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, tt, wt)) = accepted else {
            // no decrease representable at working precision
            if residual < opts.el_tol {
                return Ok(Descent {
                    u,
                    iterations: it,
                    trace,
                });
            }
            break;
        };
        if wt > w {
            return Err(Error::Internal(format!(
                "quotient increased from {w} to {wt} at an accepted step"
            )));
        }
        last_change = (w - wt) / w;
        u = trial;
        t = tt;
        w = wt;
        trace.push(w);
        step = (2.0 * step).min(64.0);
    }
    Err(Error::NotConverged {
        iterations: trace.len() - 1,
        last_change,
        residual,
        trace,
    })
}
