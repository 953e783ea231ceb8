use super::GroundState;
use crate::nonlocal_operators::Operators;
use crate::spectral_field::Field;

/// Algebraic tail diagnostics of a ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    /// sup of `|Q|(1+r)⁴` over `r ∈ [L/8, 3L/8]`
    pub decay_constant: f64,
    /// sup of `φ_Q (1+r)` over the same window
    pub coulomb_decay_constant: f64,
    /// sup of `|Q|(1+r)⁴` over the outer half `[L/4, 3L/8]`
    pub outer_decay_constant: f64,
    /// `(max - min) / max` of per-shell sups of `|Q|(1+r)⁴` in the outer half
    pub outer_variation: f64,
    /// mean of `φ_Q · r` on the shell `[3L/8 - h, 3L/8]`; tends to `‖Q‖²`
    pub coulomb_far_field: f64,
}

pub fn check_decay(gs: &GroundState) -> DecayReport {
    let ops = Operators::new(*gs.grid());
    decay_with(&ops, &gs.q, None)
}

pub(crate) fn decay_with(ops: &Operators, q: &Field, phi: Option<&Field>) -> DecayReport {
    let owned;
    let phi = match phi {
        Some(p) => p,
        None => {
            owned = ops.coulomb_potential(q).unwrap_or_else(|_| Field::zeros(*q.grid()));
            &owned
        }
    };
    let g = q.grid();
    let l = g.box_length();
    let h = g.spacing();
    let (r_in, r_mid, r_out) = (l / 8.0, l / 4.0, 3.0 * l / 8.0);
    let nshell = ((r_out - r_mid) / h).ceil().max(1.0) as usize;
    let mut shells = vec![0.0f64; nshell];
    let mut rep = DecayReport {
        decay_constant: 0.0,
        coulomb_decay_constant: 0.0,
        outer_decay_constant: 0.0,
        outer_variation: 0.0,
        coulomb_far_field: 0.0,
    };
    let (mut far_sum, mut far_count) = (0.0, 0usize);
    for idx in 0..g.len() {
        let p = g.point(idx);
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if r < r_in || r > r_out {
            continue;
        }
        let qd = q.values()[idx].abs() * (1.0 + r).powi(4);
        let pd = phi.values()[idx] * (1.0 + r);
        rep.decay_constant = rep.decay_constant.max(qd);
        rep.coulomb_decay_constant = rep.coulomb_decay_constant.max(pd);
        if r >= r_mid {
            rep.outer_decay_constant = rep.outer_decay_constant.max(qd);
            let s = (((r - r_mid) / h) as usize).min(nshell - 1);
            shells[s] = shells[s].max(qd);
        }
        if r >= r_out - h {
            far_sum += phi.values()[idx] * r;
            far_count += 1;
        }
    }
    let smax = shells.iter().cloned().fold(0.0, f64::max);
    let smin = shells.iter().cloned().fold(f64::INFINITY, f64::min);
    rep.outer_variation = if smax > 0.0 { (smax - smin) / smax } else { 0.0 };
    rep.coulomb_far_field = if far_count > 0 {
        far_sum / far_count as f64
    } else {
        f64::NAN
    };
    rep
}

/// Largest `‖u - u∘g‖ / ‖u‖` over the 48 symmetries of the cube centered
/// at the origin.
pub fn cube_asymmetry(u: &Field) -> f64 {
    let g = u.grid();
    let n = g.n();
    let norm = u.l2_norm();
    if norm == 0.0 {
        return 0.0;
    }
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let flip = |i: usize, f: bool| if f { (n - i) % n } else { i };
    let mut worst = 0.0f64;
    for perm in perms {
        for signs in 0..8u8 {
            let mut acc = 0.0;
            for (idx, v) in u.values().iter().enumerate() {
                let (i, j, k) = g.unravel(idx);
                let c = [i, j, k];
                let t = [
                    flip(c[perm[0]], signs & 1 != 0),
                    flip(c[perm[1]], signs & 2 != 0),
                    flip(c[perm[2]], signs & 4 != 0),
                ];
                let d = v - u.values()[g.index(t[0], t[1], t[2])];
                acc += d * d;
            }
            worst = worst.max((acc * g.cell_volume()).sqrt() / norm);
        }
    }
    worst
}
