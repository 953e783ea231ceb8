//! Separable interpolation of lattice fields at off-grid points.

use rayon::prelude::*;
use std::f64::consts::PI;

use super::field::Field;
use super::grid::Grid3;
use crate::error::{Error, Result};

/// How targets outside the periodic cell are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outside {
    /// Field is treated as vanishing outside the box.
    Zero,
    /// Periodic continuation.
    Wrap,
}

/// Row-major `targets.len() x n` matrix evaluating the trigonometric
/// interpolant of an `n`-point periodic line at each target.
///
/// The Nyquist mode enters as a cosine, so the interpolant is real and
/// reproduces the samples exactly.
pub fn trig_matrix(grid: &Grid3, targets: &[f64], outside: Outside) -> Vec<f64> {
    let n = grid.n();
    let l = grid.box_length();
    let half = 0.5 * l;
    let mut m = vec![0.0; targets.len() * n];
    m.par_chunks_mut(n).zip(targets.par_iter()).for_each(|(row, &t)| {
        if outside == Outside::Zero && (t < -half || t >= half) {
            return;
        }
        for (j, w) in row.iter_mut().enumerate() {
            *w = dirichlet(t - grid.coord(j), n, l);
        }
    });
    m
}

fn dirichlet(s: f64, n: usize, l: f64) -> f64 {
    let theta = 2.0 * PI * s / l;
    let mut acc = 1.0;
    for k in 1..n / 2 {
        acc += 2.0 * (k as f64 * theta).cos();
    }
    acc += (0.5 * n as f64 * theta).cos();
    acc / n as f64
}

/// Row-major `targets.len() x n` matrix of cubic Lagrange weights on the
/// (non-periodic) lattice coordinates. Stencils are shifted inward at the
/// edges, so polynomials of degree three are reproduced everywhere.
pub fn cubic_matrix(grid: &Grid3, targets: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let h = grid.spacing();
    let x0 = grid.coord(0);
    let mut m = vec![0.0; targets.len() * n];
    for (row, &t) in m.chunks_mut(n).zip(targets) {
        let s = (t - x0) / h;
        let base = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (s - (base + b) as f64) / (a as f64 - b as f64);
                }
            }
            row[base + a] = w;
        }
    }
    m
}

/// Applies per-axis matrices (`mx`, `my`, `mz`, each `n_out x n_in`) to a
/// field, producing samples on `target`.
pub fn separable_apply(u: &Field, target: Grid3, mx: &[f64], my: &[f64], mz: &[f64]) -> Result<Field> {
    let ni = u.grid().n();
    let no = target.n();
    for m in [mx, my, mz] {
        if m.len() != ni * no {
            return Err(Error::Internal(format!(
                "interpolation matrix has {} entries, expected {}",
                m.len(),
                ni * no
            )));
        }
    }
    let src = u.values();

    // z axis: (i, j, k) -> (i, j, c)
    let mut a = vec![0.0; ni * ni * no];
    a.par_chunks_mut(no).enumerate().for_each(|(ij, out)| {
        let line = &src[ij * ni..(ij + 1) * ni];
        for (c, o) in out.iter_mut().enumerate() {
            let w = &mz[c * ni..(c + 1) * ni];
            *o = w.iter().zip(line).map(|(p, q)| p * q).sum();
        }
    });

    // y axis: (i, j, c) -> (i, b, c)
    let mut b = vec![0.0; ni * no * no];
    b.par_chunks_mut(no * no).enumerate().for_each(|(i, out)| {
        let plane = &a[i * ni * no..(i + 1) * ni * no];
        for bb in 0..no {
            let w = &my[bb * ni..(bb + 1) * ni];
            for c in 0..no {
                let mut s = 0.0;
                for j in 0..ni {
                    s += w[j] * plane[j * no + c];
                }
                out[bb * no + c] = s;
            }
        }
    });

    // x axis: (i, b, c) -> (a, b, c)
    let plane = no * no;
    let mut out = vec![0.0; no * plane];
    out.par_chunks_mut(plane).enumerate().for_each(|(aa, dst)| {
        let w = &mx[aa * ni..(aa + 1) * ni];
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            let srcp = &b[i * plane..(i + 1) * plane];
            for (d, s) in dst.iter_mut().zip(srcp) {
                *d += wi * s;
            }
        }
    });
    Field::from_values(target, out)
}

/// `λ^{3/2} u(λ x)`, with `u` taken as zero outside the box.
pub fn dilate(u: &Field, lambda: f64) -> Result<Field> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dilation factor {lambda} must be positive"
        )));
    }
    let g = *u.grid();
    let targets: Vec<f64> = g.coords().iter().map(|x| lambda * x).collect();
    let m = trig_matrix(&g, &targets, Outside::Zero);
    Ok(separable_apply(u, g, &m, &m, &m)?.scaled(lambda.powf(1.5)))
}

/// `u(x - shift)` on the periodic box.
pub fn translate(u: &Field, shift: [f64; 3]) -> Result<Field> {
    let g = *u.grid();
    let mats: Vec<Vec<f64>> = shift
        .iter()
        .map(|s| {
            let t: Vec<f64> = g.coords().iter().map(|x| x - s).collect();
            trig_matrix(&g, &t, Outside::Wrap)
        })
        .collect();
    separable_apply(u, g, &mats[0], &mats[1], &mats[2])
}

/// Interpolates `u` onto another grid; points outside the source box get 0.
pub fn resample(u: &Field, target: Grid3) -> Result<Field> {
    let m = trig_matrix(u.grid(), &target.coords(), Outside::Zero);
    separable_apply(u, target, &m, &m, &m)
}

/// `V(x / λ)` by cubic Lagrange interpolation, for `λ >= 1` so that all
/// targets stay inside the box. Exact for polynomial potentials of degree
/// at most three per axis.
pub fn contract_potential(v: &Field, lambda: f64) -> Result<Field> {
    if !(lambda.is_finite() && lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "potential contraction needs lambda >= 1, got {lambda}"
        )));
    }
    let g = *v.grid();
    let targets: Vec<f64> = g.coords().iter().map(|x| x / lambda).collect();
    let m = cubic_matrix(&g, &targets);
    separable_apply(v, g, &m, &m, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::field::sample;

    fn gauss(g: Grid3, w: f64, c: [f64; 3]) -> Field {
        sample(g, |p| {
            let r2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2);
            (-r2 / (w * w)).exp()
        })
        .unwrap()
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn trig_interpolation_reproduces_samples() {
        let g = Grid3::new(16, 8.0).unwrap();
        let m = trig_matrix(&g, &g.coords(), Outside::Wrap);
        for a in 0..16 {
            for j in 0..16 {
                let want = if a == j { 1.0 } else { 0.0 };
                assert!((m[a * 16 + j] - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn dilation_of_gaussian() {
        let g = Grid3::new(64, 16.0).unwrap();
        let u = gauss(g, 1.5, [0.0; 3]);
        let d = dilate(&u, 1.2).unwrap();
        let want = gauss(g, 1.5 / 1.2, [0.0; 3]).scaled(1.2f64.powf(1.5));
        assert!(max_diff(&d, &want) < 1e-8);
        assert!((d.mass() - u.mass()).abs() < 1e-10);
    }

    #[test]
    fn translation_by_off_grid_shift() {
        let g = Grid3::new(64, 16.0).unwrap();
        let u = gauss(g, 1.5, [0.0; 3]);
        let t = translate(&u, [0.37, -1.1, 0.8]).unwrap();
        let want = gauss(g, 1.5, [0.37, -1.1, 0.8]);
        assert!(max_diff(&t, &want) < 1e-8);
    }

    #[test]
    fn resample_to_finer_grid() {
        let g = Grid3::new(64, 16.0).unwrap();
        let fine = Grid3::new(32, 8.0).unwrap();
        let r = resample(&gauss(g, 1.5, [0.0; 3]), fine).unwrap();
        assert!(max_diff(&r, &gauss(fine, 1.5, [0.0; 3])) < 1e-8);
    }

    #[test]
    fn cubic_contraction_is_exact_for_quadratics() {
        let g = Grid3::new(16, 10.0).unwrap();
        let v = sample(g, |p| p[0] * p[0] + 2.0 * p[1] * p[1] + 0.5 * p[2] * p[2] + p[0]).unwrap();
        let lam = 2.7;
        let c = contract_potential(&v, lam).unwrap();
        let want = sample(g, |p| {
            let q = [p[0] / lam, p[1] / lam, p[2] / lam];
            q[0] * q[0] + 2.0 * q[1] * q[1] + 0.5 * q[2] * q[2] + q[0]
        })
        .unwrap();
        assert!(max_diff(&c, &want) < 1e-11);
        assert!(contract_potential(&v, 0.5).is_err());
    }
}
