use crate::error::{Error, Result};

/// Periodic cubic grid with `n` points per axis on `[-L/2, L/2)^3`.
///
/// Frequencies follow the FFT ordering: index `i < n/2` carries `i / L`,
/// the rest carry `(i - n) / L` (cycles per unit length).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    n: usize,
    box_length: f64,
}

impl Grid3 {
    /// Power-of-two grid, `n >= 16`.
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} is not a power of two")));
        }
        Self::checked(n, box_length)
    }

    /// Grid admitting `n = 2^k` or `n = 3 * 2^k` (`n >= 16`), the sizes the
    /// FFT handles with radix-2/3 passes. Used for refinement studies at
    /// intermediate resolutions such as 48.
    pub fn new_smooth(n: usize, box_length: f64) -> Result<Self> {
        let ok = n.is_power_of_two() || (n.is_multiple_of(3) && (n / 3).is_power_of_two());
        if !ok {
            return Err(Error::InvalidGrid(format!("n = {n} is neither 2^k nor 3*2^k")));
        }
        Self::checked(n, box_length)
    }

    fn checked(n: usize, box_length: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidGrid(format!("n = {n} is below 16")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box length {box_length} must be positive and finite"
            )));
        }
        Ok(Self { n, box_length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Number of lattice points, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of lattice index `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_length + i as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Frequency (cycles per length) of FFT index `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        let n = self.n as isize;
        let i = i as isize;
        let k = if i < n / 2 { i } else { i - n };
        k as f64 / self.box_length
    }

    /// Largest resolved angular wavenumber along an axis, `pi / h`.
    pub fn nyquist_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx % self.n;
        let j = (idx / self.n) % self.n;
        let i = idx / (self.n * self.n);
        (i, j, k)
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Angular wavenumber `2 pi |xi|` for every lattice index.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let f: Vec<f64> = (0..self.n).map(|i| self.frequency(i)).collect();
        let mut out = Vec::with_capacity(self.len());
        for fi in &f {
            for fj in &f {
                for fk in &f {
                    out.push(2.0 * std::f64::consts::PI * (fi * fi + fj * fj + fk * fk).sqrt());
                }
            }
        }
        out
    }

    pub fn ensure_same(&self, other: &Grid3) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.n, self.box_length, other.n, other.box_length
            )));
        }
        Ok(())
    }
}
