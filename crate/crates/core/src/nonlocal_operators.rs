//! The pseudo-relativistic kinetic operator, the Coulomb convolution and
//! the quadratic and quartic energies built from them.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral_field::{Fft3, Field, Grid3};

/// Mass parameter of `sqrt(-Δ + m²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticSpec {
    m: f64,
}

impl KineticSpec {
    pub fn new(m: f64) -> Result<Self> {
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mass m = {m} must be finite and nonnegative"
            )));
        }
        Ok(Self { m })
    }

    /// The massless operator `sqrt(-Δ)`.
    pub fn massless() -> Self {
        Self { m: 0.0 }
    }

    pub fn m(&self) -> f64 {
        self.m
    }
}

/// Truncated free-space Coulomb kernel in angular wavenumber `k`,
/// `4π (1 - cos(k R)) / k²` with `2π R²` at `k = 0`.
pub fn truncated_coulomb_kernel(k: f64, cutoff: f64) -> f64 {
    if k == 0.0 {
        2.0 * PI * cutoff * cutoff
    } else {
        4.0 * PI * (1.0 - (k * cutoff).cos()) / (k * k)
    }
}

/// Energies and operator images of a single field.
#[derive(Debug, Clone)]
pub struct FieldTerms {
    /// `(sqrt(-Δ + m²) u, u)`
    pub kinetic: f64,
    /// `‖(-Δ)^{1/4} u‖²`
    pub quarter: f64,
    pub mass: f64,
    /// `D(u, u)`
    pub hartree: f64,
    /// `sqrt(-Δ + m²) u`
    pub kinetic_u: Field,
    /// `φ_u`
    pub phi: Field,
    /// Transform of `u²`.
    pub rho: Vec<Complex64>,
}

/// Precomputed spectral data for one grid. Cheap to share by reference
/// across threads.
#[derive(Debug, Clone)]
pub struct Operators {
    grid: Grid3,
    fft: Fft3,
    k: Vec<f64>,
    kernel: Vec<f64>,
    parseval: f64,
}

impl Operators {
    pub fn new(grid: Grid3) -> Self {
        let k = grid.wavenumbers();
        let cutoff = 0.5 * grid.box_length();
        let kernel = k.iter().map(|&k| truncated_coulomb_kernel(k, cutoff)).collect();
        let parseval = grid.cell_volume() / grid.len() as f64;
        Self {
            grid,
            fft: Fft3::new(grid),
            k,
            kernel,
            parseval,
        }
    }

    /// Replaces the zero-frequency Coulomb coefficient. Only useful for
    /// fault-injection checks; any value other than `2π R²` breaks the
    /// free-space convolution.
    pub fn with_coulomb_zero_mode(mut self, value: f64) -> Self {
        self.kernel[0] = value;
        self
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn fft(&self) -> &Fft3 {
        &self.fft
    }

    /// Angular wavenumbers `2π|ξ|` in lattice order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn coulomb_kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Factor turning `Σ |û|²` into `∫ u²`.
    pub fn parseval_factor(&self) -> f64 {
        self.parseval
    }

    fn check(&self, u: &Field) -> Result<()> {
        self.grid.ensure_same(u.grid())?;
        u.ensure_finite("operator input")
    }

    /// Applies the multiplier `f(k)` to `u`.
    pub fn apply_multiplier(&self, u: &Field, f: impl Fn(f64) -> f64 + Sync) -> Result<Field> {
        self.check(u)?;
        let mut spec = self.fft.forward_real(u);
        spec.par_iter_mut()
            .zip(self.k.par_iter())
            .for_each(|(c, &k)| *c *= f(k));
        self.fft.inverse_real(spec)
    }

    /// `∫ f(k) |û|²` in the continuous normalization.
    pub fn multiplier_energy(&self, u: &Field, f: impl Fn(f64) -> f64) -> Result<f64> {
        self.check(u)?;
        let spec = self.fft.forward_real(u);
        Ok(self.spectral_energy(&spec, f))
    }

    pub(crate) fn spectral_energy(&self, spec: &[Complex64], f: impl Fn(f64) -> f64) -> f64 {
        spec.iter().zip(&self.k).map(|(c, &k)| f(k) * c.norm_sqr()).sum::<f64>() * self.parseval
    }

    pub fn apply_kinetic(&self, u: &Field, spec: KineticSpec) -> Result<Field> {
        let m2 = spec.m * spec.m;
        self.apply_multiplier(u, |k| (k * k + m2).sqrt())
    }

    /// `(sqrt(-Δ + m²) u, u)`.
    pub fn kinetic_energy(&self, u: &Field, spec: KineticSpec) -> Result<f64> {
        let m2 = spec.m * spec.m;
        self.multiplier_energy(u, |k| (k * k + m2).sqrt())
    }

    /// `‖(-Δ)^{1/4} u‖²`.
    pub fn quarter_laplacian_energy(&self, u: &Field) -> Result<f64> {
        self.multiplier_energy(u, |k| k)
    }

    /// Transform of the density `u²`.
    pub fn density_spectrum(&self, u: &Field) -> Result<Vec<Complex64>> {
        self.check(u)?;
        Ok(self.fft.forward_real(&u.squared()))
    }

    /// Potential generated by a density given in frequency space.
    pub fn potential_from_density(&self, rho: &[Complex64]) -> Result<Field> {
        let spec: Vec<Complex64> = rho
            .par_iter()
            .zip(self.kernel.par_iter())
            .map(|(c, &w)| c * w)
            .collect();
        self.fft.inverse_real(spec)
    }

    /// `φ_u = |x|⁻¹ * u²`.
    pub fn coulomb_potential(&self, u: &Field) -> Result<Field> {
        let rho = self.density_spectrum(u)?;
        self.potential_from_density(&rho)
    }

    /// `∬ a(x) b(y) / |x - y|` for two densities in frequency space.
    pub fn coulomb_pairing(&self, rho_a: &[Complex64], rho_b: &[Complex64]) -> f64 {
        rho_a
            .iter()
            .zip(rho_b)
            .zip(&self.kernel)
            .map(|((a, b), &w)| w * (a.re * b.re + a.im * b.im))
            .sum::<f64>()
            * self.parseval
    }

    /// `∬ u²(x) v²(y) / |x - y|`.
    pub fn hartree_energy(&self, u: &Field, v: &Field) -> Result<f64> {
        let ru = self.density_spectrum(u)?;
        let rv = self.density_spectrum(v)?;
        Ok(self.coulomb_pairing(&ru, &rv))
    }

    /// Everything the solvers need about one field, from four transforms.
    pub fn terms(&self, u: &Field, spec: KineticSpec) -> Result<FieldTerms> {
        self.check(u)?;
        let m2 = spec.m * spec.m;
        let mut hat = self.fft.forward_real(u);
        let kinetic = self.spectral_energy(&hat, |k| (k * k + m2).sqrt());
        let quarter = if spec.m == 0.0 {
            kinetic
        } else {
            self.spectral_energy(&hat, |k| k)
        };
        hat.par_iter_mut()
            .zip(self.k.par_iter())
            .for_each(|(c, &k)| *c *= (k * k + m2).sqrt());
        let kinetic_u = self.fft.inverse_real(hat)?;
        let rho = self.fft.forward_real(&u.squared());
        let hartree = self.coulomb_pairing(&rho, &rho);
        let phi = self.potential_from_density(&rho)?;
        Ok(FieldTerms {
            kinetic,
            quarter,
            mass: u.mass(),
            hartree,
            kinetic_u,
            phi,
            rho,
        })
    }

    /// Self and cross Hartree energies `(D(u,u), D(v,v), D(u,v))`.
    pub fn hartree_matrix(&self, u: &Field, v: &Field) -> Result<(f64, f64, f64)> {
        let ru = self.density_spectrum(u)?;
        let rv = self.density_spectrum(v)?;
        Ok((
            self.coulomb_pairing(&ru, &ru),
            self.coulomb_pairing(&rv, &rv),
            self.coulomb_pairing(&ru, &rv),
        ))
    }
}
