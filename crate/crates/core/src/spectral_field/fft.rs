use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::Field;
use super::grid::Grid3;
use crate::error::{Error, Result};

/// Three-dimensional complex FFT on an `n^3` lattice, built from 1-D
/// passes along each axis. Line transforms run in parallel; each line is
/// processed identically regardless of scheduling, so results are
/// bitwise reproducible.
#[derive(Clone)]
pub struct Fft3 {
    grid: Grid3,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("grid", &self.grid).finish()
    }
}

impl Fft3 {
    pub fn new(grid: Grid3) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n()),
            inverse: planner.plan_fft_inverse(grid.n()),
        }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    /// Unnormalized forward DFT, `X_k = Σ_j x_j e^{-2πi jk/n}` per axis.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse DFT including the `1/n^3` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.grid.len() as f64;
        data.par_iter_mut().for_each(|c| *c *= s);
    }

    /// Forward transform of a real field.
    pub fn forward_real(&self, f: &Field) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    /// Inverse transform expected to be real. The RMS of the imaginary part
    /// must stay below `1e-10` of the real RMS plus an absolute `1e-13`
    /// before it is dropped; the floor absorbs roundoff in nearly
    /// cancelling differences such as converged gradients.
    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Result<Field> {
        self.inverse(&mut data);
        let (re2, im2) = data
            .iter()
            .fold((0.0, 0.0), |(r, i), c| (r + c.re * c.re, i + c.im * c.im));
        let len = data.len() as f64;
        let (re_rms, im_rms) = ((re2 / len).sqrt(), (im2 / len).sqrt());
        if im_rms > 1e-10 * re_rms + 1e-13 {
            return Err(Error::Internal(format!(
                "imaginary residue {:e} exceeds tolerance (real norm {:e})",
                im2.sqrt(),
                re2.sqrt()
            )));
        }
        let values: Vec<f64> = data.into_iter().map(|c| c.re).collect();
        Field::from_values(self.grid, values)
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n();
        assert_eq!(data.len(), n * n * n, "FFT buffer has wrong length");
        let scratch_len = fft.get_inplace_scratch_len();

        // innermost axis: contiguous rows
        data.par_chunks_mut(n).for_each_init(
            || vec![Complex64::new(0.0, 0.0); scratch_len],
            |scratch, row| fft.process_with_scratch(row, scratch),
        );

        // middle axis: columns within each plane
        data.par_chunks_mut(n * n).for_each_init(
            || {
                (
                    vec![Complex64::new(0.0, 0.0); n],
                    vec![Complex64::new(0.0, 0.0); scratch_len],
                )
            },
            |(line, scratch), plane| {
                for k in 0..n {
                    for j in 0..n {
                        line[j] = plane[j * n + k];
                    }
                    fft.process_with_scratch(line, scratch);
                    for j in 0..n {
                        plane[j * n + k] = line[j];
                    }
                }
            },
        );

        // outermost axis: gather lines into a transposed buffer
        let plane = n * n;
        let mut buf = vec![Complex64::new(0.0, 0.0); data.len()];
        {
            let src: &[Complex64] = data;
            buf.par_chunks_mut(n).enumerate().for_each_init(
                || vec![Complex64::new(0.0, 0.0); scratch_len],
                |scratch, (c, line)| {
                    for i in 0..n {
                        line[i] = src[i * plane + c];
                    }
                    fft.process_with_scratch(line, scratch);
                },
            );
        }
        data.par_chunks_mut(plane).enumerate().for_each(|(i, out)| {
            for c in 0..plane {
                out[c] = buf[c * n + i];
            }
        });
    }
}
