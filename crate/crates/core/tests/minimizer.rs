mod common;

use common::{gs, harmonic, rel};
use hartree_core::coupled_minimizer::{
    concentration_probe, el_residuals, lagrange_multipliers, minimize, minimize_single, rayleigh_multipliers,
    MinimizeOptions, MinimizerResult,
};
use hartree_core::energy_model::{single_energy, total_energy, Params};
use hartree_core::{Grid3, Operators};

fn grid() -> Grid3 {
    Grid3::new_smooth(32, 32.0 / 3.0).unwrap()
}

fn opts() -> MinimizeOptions {
    MinimizeOptions {
        a_star: Some(gs().a_star),
        ..MinimizeOptions::default()
    }
}

#[test]
fn existence_run_converges_to_a_critical_point() {
    let a = gs().a_star;
    let g = grid();
    let v = harmonic(g);
    let p = Params::new(0.5 * a, 0.4 * a, 0.2 * a, 0.0).unwrap();
    let res = minimize(&v, &v, &p, g, &opts()).unwrap();
    assert!(res.converged && !res.diverged, "{}", res.status());
    assert!(rel(res.u1.mass(), 1.0) < 1e-10 && rel(res.u2.mass(), 1.0) < 1e-10);
    assert!(res.trace.windows(2).all(|w| w[1].energy <= w[0].energy));

    let ops = Operators::new(g);
    let e = total_energy(&ops, &res.u1, &res.u2, &v, &v, &p).unwrap();
    assert!(rel(e, res.energy) < 1e-12);
    let (r1, r2) = el_residuals(&ops, &res.u1, &res.u2, &v, &v, &p).unwrap();
    assert!(r1 < 1e-4 && r2 < 1e-4, "{r1} {r2}");
    // the multiplier formula agrees with the Rayleigh quotient at a critical point
    let (m1, m2) = lagrange_multipliers(&ops, &res.u1, &res.u2, &v, &v, &p).unwrap();
    let (q1, q2) = rayleigh_multipliers(&ops, &res.u1, &res.u2, &v, &v, &p).unwrap();
    assert!((m1 - q1).abs() < 1e-8 && (m2 - q2).abs() < 1e-8);
    assert!((m1 - res.mu1).abs() < 1e-8 && (m2 - res.mu2).abs() < 1e-8);
}

#[test]
fn result_container_round_trips() {
    let a = gs().a_star;
    let g = grid();
    let v = harmonic(g);
    let p = Params::new(0.3 * a, 0.3 * a, 0.1 * a, 0.5).unwrap();
    let res = minimize(&v, &v, &p, g, &opts()).unwrap();
    let path = std::env::temp_dir().join(format!("hartree-core-result-{}.bin", std::process::id()));
    res.save(&path).unwrap();
    let (u1, u2) = MinimizerResult::load_fields(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(u1.values(), res.u1.values());
    assert_eq!(u2.values(), res.u2.values());
}

#[test]
fn decoupled_pair_equals_two_single_runs() {
    let a = gs().a_star;
    let g = grid();
    let v = harmonic(g);
    let p = Params::new(0.45 * a, 0.45 * a, 0.0, 0.0).unwrap();
    let pair = minimize(&v, &v, &p, g, &opts()).unwrap();
    let single = minimize_single(&v, 0.45 * a, 0.0, g, &opts()).unwrap();
    assert!(pair.converged && single.converged);
    assert!(
        rel(pair.energy, 2.0 * single.energy) < 1e-6,
        "{} vs {}",
        pair.energy,
        single.energy
    );
    let ops = Operators::new(g);
    assert!(
        rel(
            single_energy(&ops, &single.u, &v, 0.45 * a, 0.0).unwrap(),
            single.energy
        ) < 1e-12
    );
}

#[test]
fn beyond_beta_high_the_flow_diverges() {
    let a = gs().a_star;
    let g = grid();
    let v = harmonic(g);
    let p = Params::new(0.5 * a, 0.5 * a, 0.75 * a, 0.0).unwrap();
    let res = minimize(&v, &v, &p, g, &opts()).unwrap();
    assert!(res.diverged && !res.converged);
    assert_eq!(res.status(), "diverged");
}

#[test]
fn concentration_probe_separates_the_regimes() {
    let s = gs();
    let a = s.a_star;
    let v = harmonic(*s.grid());
    let radii: Vec<f64> = (0..=10).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let below = Params::new(0.5 * a, 0.5 * a, 0.25 * a, 0.0).unwrap();
    let above = Params::new(0.5 * a, 0.5 * a, 0.75 * a, 0.0).unwrap();
    let rb = concentration_probe(s, &v, &v, &below, [0.0; 3], &radii).unwrap();
    let ra = concentration_probe(s, &v, &v, &above, [0.0; 3], &radii).unwrap();
    assert!(!rb.unbounded_below && rb.slope > 0.0, "{}", rb.slope);
    assert!(ra.unbounded_below && ra.slope < 0.0, "{}", ra.slope);
    // E(ψ_R) ~ R(2 - (a1 + a2 + 2β)/a*)·(T/M of the profile) at large R
    assert!(rel(ra.slope, -rb.slope) < 0.2, "{} vs {}", ra.slope, rb.slope);
}
