//! Periodic cubic grids, sampled fields, quadrature and transforms.

mod fft;
mod field;
mod grid;
pub mod resample;

pub use fft::Fft3;
pub use field::{inner_product, normalize_mass, sample, Field};
pub use grid::Grid3;

/// Power-of-two grid; shorthand for [`Grid3::new`].
pub fn make_grid(n: usize, box_length: f64) -> crate::Result<Grid3> {
    Grid3::new(n, box_length)
}
