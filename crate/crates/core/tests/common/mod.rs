#![allow(dead_code)]

use std::sync::OnceLock;

use hartree_core::{sample, solve_scalar_ground_state, Field, Grid3, GroundState};

/// One coarse ground state shared by every test in a binary.
pub fn gs() -> &'static GroundState {
    static GS: OnceLock<GroundState> = OnceLock::new();
    GS.get_or_init(|| solve_scalar_ground_state(Grid3::new_smooth(32, 16.0).unwrap(), 1e-10, 5000).unwrap())
}

pub fn harmonic(grid: Grid3) -> Field {
    sample(grid, |x| x.iter().map(|c| c * c).sum()).unwrap()
}

pub fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}
