use super::grid::Grid3;
use crate::error::{Error, Result};

/// Real scalar function sampled on a [`Grid3`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid3,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid3, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Wraps raw samples, checking length and finiteness.
    pub fn from_values(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let p = grid.point(pos);
            return Err(Error::NonFiniteSample {
                x: p[0],
                y: p[1],
                z: p[2],
                value: values[pos],
            });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_values_unchecked(grid: Grid3, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFiniteField(what.to_string()))
        }
    }

    /// `∫ u^2 dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_values_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise square.
    pub fn squared(&self) -> Field {
        self.map(|v| v * v)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field::from_values_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        ))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field::from_values_unchecked(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        ))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(-1.0, other)
    }

    /// Value at lattice indices.
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }
}

/// Evaluates `f` at every lattice point.
pub fn sample(grid: Grid3, f: impl Fn([f64; 3]) -> f64) -> Result<Field> {
    let mut values = Vec::with_capacity(grid.len());
    for idx in 0..grid.len() {
        let p = grid.point(idx);
        let v = f(p);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample {
                x: p[0],
                y: p[1],
                z: p[2],
                value: v,
            });
        }
        values.push(v);
    }
    Ok(Field::from_values_unchecked(grid, values))
}

/// Rectangle-rule `∫ a b dx`.
pub fn inner_product(a: &Field, b: &Field) -> Result<f64> {
    a.grid.ensure_same(&b.grid)?;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() * a.grid.cell_volume())
}

/// Rescales `u` so that `∫ u^2 dx = target`.
pub fn normalize_mass(u: &Field, target: f64) -> Result<Field> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target mass {target} must be positive"
        )));
    }
    let mass = u.mass();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroField("cannot normalize a zero field".into()));
    }
    let c = (target / mass).sqrt();
    if c == 1.0 {
        return Ok(u.clone());
    }
    Ok(u.scaled(c))
}
