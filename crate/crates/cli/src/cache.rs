//! Ground states cached per grid under `HARTREE_CACHE_DIR`.

use std::path::{Path, PathBuf};

use hartree_core::{solve_scalar_ground_state, Grid3, GroundState};

use crate::error::CliResult;

pub const CACHE_ENV: &str = "HARTREE_CACHE_DIR";

pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".hartree-cache"))
}

pub fn cache_path(dir: &Path, grid: &Grid3) -> PathBuf {
    dir.join(format!("gs_n{}_L{}.bin", grid.n(), grid.box_length()))
}

#[derive(Debug, Clone)]
pub struct Resolved {
    pub gs: GroundState,
    pub path: PathBuf,
    pub from_cache: bool,
}

/// Loads the cached ground state for `grid`, or solves and stores it.
/// A cache file that fails to load is recomputed and replaced.
pub fn resolve_ground_state(dir: &Path, grid: Grid3, tol: f64, max_iter: usize) -> CliResult<Resolved> {
    let path = cache_path(dir, &grid);
    if path.exists() {
        match GroundState::load(&path) {
            Ok(gs) if gs.grid() == &grid => {
                return Ok(Resolved {
                    gs,
                    path,
                    from_cache: true,
                })
            }
            Ok(_) => eprintln!("warning: {} holds a different grid; recomputing", path.display()),
            Err(e) => eprintln!("warning: ignoring unreadable cache {}: {e}", path.display()),
        }
    }
    let gs = solve_scalar_ground_state(grid, tol, max_iter)?;
    std::fs::create_dir_all(dir)?;
    // concurrent writers each rename a private file into place
    let tmp = dir.join(format!(
        ".gs_{}_{:?}.tmp",
        std::process::id(),
        std::thread::current().id()
    ));
    gs.save(&tmp)?;
    std::fs::rename(&tmp, &path)?;
    Ok(Resolved {
        gs,
        path,
        from_cache: false,
    })
}
