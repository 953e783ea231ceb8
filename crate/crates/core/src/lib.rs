//! Spectral solvers for the coupled pseudo-relativistic Hartree energy.

// `!(x > 0.0)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod appendix_groundstates;
pub mod container;
pub mod coupled_minimizer;
pub mod energy_model;
pub mod error;
pub mod ground_state;
pub mod nonlocal_operators;
pub mod spectral_field;

pub use error::{Error, Result};
pub use ground_state::{solve_scalar_ground_state, GroundState, GroundStateOptions};
pub use nonlocal_operators::{KineticSpec, Operators};
pub use spectral_field::{inner_product, make_grid, normalize_mass, sample, Fft3, Field, Grid3};
