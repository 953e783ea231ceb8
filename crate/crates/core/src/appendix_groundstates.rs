//! Closed-form ground states of the free coupled system
//! `sqrt(-Δ)u + u = (aφ_u + βφ_v)u`, `sqrt(-Δ)v + v = (aφ_v + βφ_u)v`,
//! built from multiples of `Q`, with the Nehari identities, the action and
//! the `h` quotient.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::nonlocal_operators::Operators;
use crate::spectral_field::Field;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Construction {
    /// `(sqrt(k) Q, sqrt(l) Q)` with `ak + βl = 1 = βk + al`.
    Asymmetric { k: f64, l: f64 },
    /// `(Q sin θ / sqrt(a), Q cos θ / sqrt(a))` when `a = β`.
    Symmetric { theta: f64 },
}

#[derive(Debug, Clone)]
pub struct CoupledGS {
    pub u0: Field,
    pub v0: Field,
    /// Mass factors: `‖u₀‖² = k a*`, `‖v₀‖² = l a*`.
    pub k: f64,
    pub l: f64,
    pub theta: Option<f64>,
    pub action: f64,
    pub construction: Construction,
}

/// Solves `[[p, q], [r, s]] x = b` by elimination; `None` when singular.
fn solve2(p: f64, q: f64, r: f64, s: f64, b: [f64; 2]) -> Option<[f64; 2]> {
    let scale = p.abs().max(q.abs()).max(r.abs()).max(s.abs());
    if scale == 0.0 {
        return None;
    }
    // pivot on the larger entry of the first column
    let (p, q, r, s, b) = if r.abs() > p.abs() {
        (r, s, p, q, [b[1], b[0]])
    } else {
        (p, q, r, s, b)
    };
    let f = r / p;
    let s2 = s - f * q;
    if s2.abs() <= 1e-14 * scale {
        return None;
    }
    let y = (b[1] - f * b[0]) / s2;
    Some([(b[0] - q * y) / p, y])
}

/// Ground state of the free coupled system from the scalar `Q`.
pub fn closed_form_coupled_gs(a: f64, beta: f64, gs: &GroundState, theta: Option<f64>) -> Result<CoupledGS> {
    if !(a > 0.0 && beta > 0.0 && a.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need a, beta > 0, got a = {a}, beta = {beta}"
        )));
    }
    let ops = Operators::new(*gs.grid());
    let q = &gs.q;
    let equal = (a - beta).abs() <= 1e-12 * a.max(beta);
    let (u0, v0, k, l, construction) = if equal {
        let th = theta.ok_or_else(|| {
            Error::InvalidParameter("a = beta leaves a one-parameter family; an angle is required".into())
        })?;
        if !(th > 0.0 && th < 4.0 * FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!("theta {th} outside (0, 2π)")));
        }
        let quarter_turns = th / FRAC_PI_2;
        if (quarter_turns - quarter_turns.round()).abs() < 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "theta {th} is a multiple of π/2, so one component vanishes"
            )));
        }
        let (s, c) = th.sin_cos();
        let amp = 1.0 / a.sqrt();
        (
            q.scaled(s * amp),
            q.scaled(c * amp),
            s * s / a,
            c * c / a,
            Construction::Symmetric { theta: th },
        )
    } else {
        let [k, l] = solve2(a, beta, beta, a, [1.0, 1.0])
            .ok_or_else(|| Error::Degenerate(format!("mass system singular for a = {a}, beta = {beta}")))?;
        if !(k > 0.0 && l > 0.0) {
            return Err(Error::Precondition(format!(
                "mass factors k = {k}, l = {l} are not both positive"
            )));
        }
        (
            q.scaled(k.sqrt()),
            q.scaled(l.sqrt()),
            k,
            l,
            Construction::Asymmetric { k, l },
        )
    };
    let action = coupled_action(&ops, &u0, &v0, a, beta)?;
    Ok(CoupledGS {
        u0,
        v0,
        k,
        l,
        theta: if equal { theta } else { None },
        action,
        construction,
    })
}

/// `‖u‖²_{H^{1/2}} = ‖(-Δ)^{1/4}u‖² + ‖u‖²`.
fn h_half(ops: &Operators, u: &Field) -> Result<f64> {
    Ok(ops.quarter_laplacian_energy(u)? + u.mass())
}

/// Relative defects of `‖u‖²_{H^{1/2}} = aD(u,u) + βD(v,u)` and the mirror
/// identity for `v`.
pub fn nehari_residual(ops: &Operators, u: &Field, v: &Field, a: f64, beta: f64) -> Result<(f64, f64)> {
    for (name, f) in [("u", u), ("v", v)] {
        f.ensure_finite(name)?;
        if f.max_abs() == 0.0 {
            return Err(Error::ZeroField(name.into()));
        }
    }
    let (duu, dvv, duv) = ops.hartree_matrix(u, v)?;
    let (nu, nv) = (h_half(ops, u)?, h_half(ops, v)?);
    Ok((
        (nu - a * duu - beta * duv).abs() / nu,
        (nv - a * dvv - beta * duv).abs() / nv,
    ))
}

/// Positive scalars `(s, t)` putting `(su, tv)` on the Nehari set. The
/// identities are linear in `(s², t²)`.
pub fn nehari_repair(ops: &Operators, u: &Field, v: &Field, a: f64, beta: f64) -> Result<(Field, Field)> {
    let (duu, dvv, duv) = ops.hartree_matrix(u, v)?;
    let (nu, nv) = (h_half(ops, u)?, h_half(ops, v)?);
    let [x, y] = solve2(a * duu, beta * duv, beta * duv, a * dvv, [nu, nv])
        .ok_or_else(|| Error::Degenerate("Nehari scaling system is singular".into()))?;
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::Degenerate(format!(
            "Nehari scaling needs positive squares, got ({x}, {y})"
        )));
    }
    Ok((u.scaled(x.sqrt()), v.scaled(y.sqrt())))
}

/// `½(‖u‖²_{H^{1/2}} + ‖v‖²_{H^{1/2}}) - ¼(aD(u,u) + aD(v,v) + 2βD(u,v))`.
pub fn coupled_action(ops: &Operators, u: &Field, v: &Field, a: f64, beta: f64) -> Result<f64> {
    u.ensure_finite("u")?;
    v.ensure_finite("v")?;
    let (duu, dvv, duv) = ops.hartree_matrix(u, v)?;
    Ok(0.5 * (h_half(ops, u)? + h_half(ops, v)?) - 0.25 * (a * duu + a * dvv + 2.0 * beta * duv))
}

/// `H = (T(u₁) + T(u₂))(M(u₁) + M(u₂)) / (a(D₁₁ + D₂₂ + 2D₁₂))`.
pub fn h_quotient(ops: &Operators, u1: &Field, u2: &Field, a: f64) -> Result<f64> {
    let (d11, d22, d12) = ops.hartree_matrix(u1, u2)?;
    let den = a * (d11 + d22 + 2.0 * d12);
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!("h denominator {den} is not positive")));
    }
    let t = ops.quarter_laplacian_energy(u1)? + ops.quarter_laplacian_energy(u2)?;
    Ok(t * (u1.mass() + u2.mass()) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solve2_reproduces_symmetric_solution() {
        for (a, b) in [(1.0, 0.3), (0.2, 2.5), (1.7, 1.1), (3.0, 1e-3)] {
            let [k, l] = solve2(a, b, b, a, [1.0, 1.0]).unwrap();
            let exact = 1.0 / (a + b);
            assert!((k - exact).abs() <= 1e-14 * exact, "{k} {exact}");
            assert!((l - exact).abs() <= 1e-14 * exact);
        }
        assert!(solve2(1.0, 1.0, 1.0, 1.0, [1.0, 1.0]).is_none());
    }

    proptest! {
        #[test]
        fn solve2_solves(p in 0.1f64..5.0, q in -3.0f64..3.0, r in -3.0f64..3.0, s in 0.1f64..5.0, b0 in -2.0f64..2.0, b1 in -2.0f64..2.0) {
            prop_assume!((p * s - q * r).abs() > 1e-3);
            let [x, y] = solve2(p, q, r, s, [b0, b1]).unwrap();
            prop_assert!((p * x + q * y - b0).abs() < 1e-9);
            prop_assert!((r * x + s * y - b1).abs() < 1e-9);
        }
    }
}
