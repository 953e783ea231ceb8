use std::fmt;
use std::path::Path;

use super::flow::TraceEntry;
use crate::container::{Container, MINIMIZER_MAGIC};
use crate::energy_model::Params;
use crate::error::{Error, Result};
use crate::spectral_field::{Field, Grid3};

#[derive(Debug, Clone)]
pub struct MinimizerResult {
    pub u1: Field,
    pub u2: Field,
    pub energy: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub el_residual1: f64,
    pub el_residual2: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    /// Energy fell below the floor or a component collapsed to the
    /// lattice scale.
    pub diverged: bool,
    pub iterations: usize,
    /// Most negative sample relative to the largest, over both components.
    pub min_sample: f64,
    pub params: Params,
    pub warning: Option<String>,
}

impl MinimizerResult {
    pub const VERSION: &'static str = "hartree-minimizer 1";

    pub fn status(&self) -> &'static str {
        if self.diverged {
            "diverged"
        } else if self.converged {
            "converged"
        } else {
            "not-converged"
        }
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let g = self.u1.grid();
        let mut e = vec![
            ("status", self.status().to_string()),
            ("n", g.n().to_string()),
            ("box_length", format!("{:?}", g.box_length())),
            ("a1", format!("{:?}", self.params.a1)),
            ("a2", format!("{:?}", self.params.a2)),
            ("beta", format!("{:?}", self.params.beta)),
            ("m", format!("{:?}", self.params.m)),
            ("energy", format!("{:?}", self.energy)),
            ("mu1", format!("{:?}", self.mu1)),
            ("mu2", format!("{:?}", self.mu2)),
            ("el_residual1", format!("{:?}", self.el_residual1)),
            ("el_residual2", format!("{:?}", self.el_residual2)),
            ("mass1", format!("{:?}", self.u1.mass())),
            ("mass2", format!("{:?}", self.u2.mass())),
            ("iterations", self.iterations.to_string()),
            ("min_sample", format!("{:?}", self.min_sample)),
        ];
        if let Some(w) = &self.warning {
            e.push(("warning", w.clone()));
        }
        e
    }

    pub fn to_container(&self) -> Container {
        let mut c = Container::new(MINIMIZER_MAGIC, self.u1.grid().n());
        for (k, v) in self.entries() {
            c.set(k, v);
        }
        c.fields.push(self.u1.values().to_vec());
        c.fields.push(self.u2.values().to_vec());
        c
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_container().save(path)
    }

    /// Reads back the two fields and the grid of a saved result.
    pub fn load_fields(path: &Path) -> Result<(Field, Field)> {
        let c = Container::load(path, MINIMIZER_MAGIC)?;
        let grid = Grid3::new_smooth(c.n, c.get_f64("box_length")?)?;
        if c.fields.len() != 2 {
            return Err(Error::Format(format!("expected 2 fields, found {}", c.fields.len())));
        }
        Ok((
            Field::from_values(grid, c.fields[0].clone())?,
            Field::from_values(grid, c.fields[1].clone())?,
        ))
    }
}

impl fmt::Display for MinimizerResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", Self::VERSION)?;
        for (k, v) in self.entries() {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}
