//! Named invariant checks, grouped into suites.
//!
//! The helpers are public so that external harnesses can reuse the same
//! measurements with their own inputs.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use hartree_core::appendix_groundstates::{closed_form_coupled_gs, coupled_action, h_quotient, nehari_residual};
use hartree_core::coupled_minimizer::{
    concentration_probe, concentration_profile, minimize, minimize_single, pohozaev_coupled_residual, scaling_probe,
    MinimizeOptions, MinimizerResult,
};
use hartree_core::energy_model::{estimate_eta, thresholds, EtaOptions, Params, VerdictKind};
use hartree_core::ground_state::weinstein_quotient;
use hartree_core::{normalize_mass, sample, Field, Grid3, GroundState, Operators};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::{resolve_gs, sweep_rows, SweepRow};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SUITES: &[&str] = &[
    "operators",
    "coulomb",
    "gs",
    "gn",
    "eta",
    "classify",
    "minimizer",
    "probes",
    "appendix",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Check {
    /// Runs `f`, timing it; an error counts as a failure.
    pub fn run(id: &str, f: impl FnOnce() -> CliResult<(bool, String)>) -> Check {
        let t = Instant::now();
        let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        Check {
            id: id.to_string(),
            passed,
            detail,
            seconds: t.elapsed().as_secs_f64(),
        }
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

/// Largest deviation of `K e_ξ` from `sqrt(|2πξ|² + m²) e_ξ` over a few
/// lattice wavevectors, relative to the eigenvalue.
pub fn plane_wave_error(grid: Grid3, m: f64) -> CliResult<f64> {
    let ops = Operators::new(grid);
    let spec = hartree_core::KineticSpec::new(m)?;
    let l = grid.box_length();
    let half = (grid.n() / 2) as i64;
    let mut worst = 0.0f64;
    for xi in [[1i64, 0, 0], [1, 2, -3], [0, -5, 7], [half - 1, 1, 0]] {
        let f = [xi[0] as f64 / l, xi[1] as f64 / l, xi[2] as f64 / l];
        let u = sample(grid, |x| (2.0 * PI * (f[0] * x[0] + f[1] * x[1] + f[2] * x[2])).cos())?;
        let k2: f64 = f.iter().map(|c| (2.0 * PI * c).powi(2)).sum();
        let lambda = (k2 + m * m).sqrt();
        let ku = ops.apply_kinetic(&u, spec)?;
        let err = ku.axpy(-lambda, &u)?.max_abs() / (lambda * u.max_abs());
        worst = worst.max(err);
    }
    Ok(worst)
}

/// `(φ(0), D)` for the unit-mass Gaussian charge `π^{-3/2} e^{-|x|²}`.
pub fn gaussian_coulomb(ops: &Operators) -> CliResult<(f64, f64)> {
    let g = *ops.grid();
    let u = sample(g, |x| {
        PI.powf(-0.75) * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 2.0).exp()
    })?;
    let phi = ops.coulomb_potential(&u)?;
    let c = g.n() / 2;
    Ok((phi.at(c, c, c), ops.hartree_energy(&u, &u)?))
}

/// `φ(0) = 2/sqrt(π)` and `D = sqrt(2/π)` for that charge.
pub const GAUSSIAN_PHI0: f64 = std::f64::consts::FRAC_2_SQRT_PI;
pub const GAUSSIAN_SELF_ENERGY: f64 = std::f64::consts::FRAC_2_SQRT_PI * std::f64::consts::FRAC_1_SQRT_2;

/// Smooth random fields: sums of up to three Gaussians with mixed signs.
pub fn random_trials(grid: Grid3, count: usize, seed: u64) -> CliResult<Vec<Field>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = grid.box_length() / 8.0;
    (0..count)
        .map(|_| {
            let bumps: Vec<([f64; 3], f64, f64)> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let c = [
                        rng.gen_range(-reach..reach),
                        rng.gen_range(-reach..reach),
                        rng.gen_range(-reach..reach),
                    ];
                    (c, rng.gen_range(1.0..2.5), rng.gen_range(-0.5..1.0))
                })
                .collect();
            let u = sample(grid, |x| {
                bumps
                    .iter()
                    .map(|(c, w, a)| {
                        let r2: f64 = (0..3).map(|d| (x[d] - c[d]).powi(2)).sum();
                        a * (-r2 / (w * w)).exp()
                    })
                    .sum()
            })?;
            Ok(normalize_mass(&u, 1.0)?)
        })
        .collect()
}

/// Region of the `(a₁, a₂, β)` partition, decided independently of the
/// classifier from the strict inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Exists,
    None,
    /// Strictly inside the strip between the thresholds.
    Strip,
    /// On a boundary or outside every hypothesis.
    Undecided,
}

pub fn expected_region(a1: f64, a2: f64, beta: f64, a_star: f64) -> Region {
    let eps = 1e-9 * a_star;
    let high = a_star - 0.5 * (a1 + a2);
    if a1 > a_star + eps || a2 > a_star + eps || beta > high + eps {
        return Region::None;
    }
    let open = |x: f64| x > eps && x < a_star - eps;
    if !(open(a1) && open(a2)) || (beta - high).abs() <= eps {
        return Region::Undecided;
    }
    let low = ((a_star - a1) * (a_star - a2)).sqrt();
    if beta < low - eps {
        Region::Exists
    } else if beta > low + eps {
        Region::Strip
    } else {
        Region::Undecided
    }
}

/// Rows whose verdict disagrees with [`expected_region`], as messages.
pub fn table_mismatches(rows: &[SweepRow], a_star: f64) -> Vec<String> {
    let mut bad = Vec::new();
    for r in rows {
        let (d, beta) = match (&r.outcome, r.beta) {
            (Ok(d), Some(b)) => (d, b),
            (Err(e), _) => {
                bad.push(format!("row {} failed: {e}", r.index));
                continue;
            }
            _ => continue,
        };
        let kind = d.record.verdict.kind;
        let ok = match expected_region(r.a1, r.a2, beta, a_star) {
            Region::Exists => kind == VerdictKind::ExistsMinimizer,
            Region::None => kind == VerdictKind::NoMinimizer,
            Region::Strip => matches!(
                kind,
                VerdictKind::IndeterminateStrip | VerdictKind::StripExistsByContinuity
            ),
            Region::Undecided => kind == VerdictKind::IndeterminateStrip,
        };
        if !ok {
            bad.push(format!(
                "row {} (a1 = {}, a2 = {}, beta = {beta}): {kind} by {}",
                r.index, r.a1, r.a2, d.record.verdict.rule
            ));
        }
    }
    bad
}

pub fn harmonic(grid: Grid3) -> CliResult<Field> {
    Ok(sample(grid, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2])?)
}

/// Existence-regime run with harmonic traps at `(0.5a*, 0.5a*, 0.5β_low)`.
pub fn existence_run(gs: &GroundState, grid: Grid3) -> CliResult<MinimizerResult> {
    let a = 0.5 * gs.a_star;
    let bl = thresholds(a, a, gs.a_star)?.beta_low.unwrap_or(0.0);
    let v = harmonic(grid)?;
    let opts = MinimizeOptions {
        a_star: Some(gs.a_star),
        ..Default::default()
    };
    Ok(minimize(&v, &v, &Params::new(a, a, 0.5 * bl, 0.0)?, grid, &opts)?)
}

/// Masses, residuals and monotone trace of a converged run.
pub fn existence_verdict(res: &MinimizerResult, tol_r: f64) -> (bool, String) {
    let mass_err = (res.u1.mass() - 1.0).abs().max((res.u2.mass() - 1.0).abs());
    let resid = res.el_residual1.max(res.el_residual2);
    let monotone = res.trace.windows(2).all(|w| w[1].energy <= w[0].energy);
    (
        res.converged && mass_err <= 1e-10 && resid < tol_r && monotone,
        format!(
            "status {}, E = {:.10}, mass error {mass_err:.1e}, residual {resid:.2e}, {} iterations, monotone {monotone}",
            res.status(),
            res.energy,
            res.iterations
        ),
    )
}

/// Relative gap between the decoupled symmetric pair and twice the
/// single-equation minimum.
pub fn decoupled_gap(gs: &GroundState, grid: Grid3) -> CliResult<(f64, f64, f64)> {
    let a = 0.5 * gs.a_star;
    let v = harmonic(grid)?;
    let opts = MinimizeOptions::default();
    let pair = minimize(&v, &v, &Params::new(a, a, 0.0, 0.0)?, grid, &opts)?;
    let single = minimize_single(&v, a, 0.0, grid, &opts)?;
    if !(pair.converged && single.converged) {
        return Err(CliError::NotConverged("decoupled runs did not converge".into()));
    }
    Ok((pair.energy, single.energy, rel(pair.energy, 2.0 * single.energy)))
}

/// Concentration slope at `(0.5a*, 0.5a*, 1.5β_high)` and its prediction
/// `2 - (a₁ + a₂ + 2β)/a*`.
pub fn concentration_slope(gs: &GroundState, grid: Grid3) -> CliResult<(f64, f64, bool)> {
    let a = 0.5 * gs.a_star;
    let beta = 1.5 * thresholds(a, a, gs.a_star)?.beta_high;
    let p = Params::new(a, a, beta, 0.0)?;
    let v = harmonic(grid)?;
    let radii: Vec<f64> = (0..=10).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let r = concentration_probe(gs, &v, &v, &p, [0.0; 3], &radii)?;
    Ok((r.slope, 2.0 - (2.0 * a + 2.0 * beta) / gs.a_star, r.unbounded_below))
}

/// Scaling probe on the cut-off ground-state pair, same parameters.
pub fn scaling_unbounded(gs: &GroundState) -> CliResult<(f64, bool)> {
    let a = 0.5 * gs.a_star;
    let beta = 1.5 * thresholds(a, a, gs.a_star)?.beta_high;
    let p = Params::new(a, a, beta, 0.0)?;
    let g = *gs.grid();
    let u = concentration_profile(gs, g.box_length() / 4.0)?;
    let v = harmonic(g)?;
    let lambdas: Vec<f64> = (0..=15).map(|i| 2f64.powf(i as f64 / 3.0)).collect();
    let r = scaling_probe(&u, &u, &v, &v, &p, &lambdas)?;
    Ok((r.slope, r.unbounded_below))
}

/// A supercritical first coupling; returns whether the run diverged.
pub fn supercritical_run(gs: &GroundState, grid: Grid3) -> CliResult<MinimizerResult> {
    let v = harmonic(grid)?;
    let p = Params::new(1.5 * gs.a_star, 0.5 * gs.a_star, 0.0, 0.0)?;
    let opts = MinimizeOptions {
        a_star: Some(gs.a_star),
        ..Default::default()
    };
    Ok(minimize(&v, &v, &p, grid, &opts)?)
}

/// Everything the checks need; the ground state is resolved on demand.
pub struct VerifyContext {
    pub cfg: RunConfig,
    /// Zero-frequency Coulomb coefficient override, for fault injection.
    pub coulomb_zero_mode: Option<f64>,
    gs: std::cell::OnceCell<GroundState>,
}

impl VerifyContext {
    pub fn new(cfg: RunConfig, coulomb_zero_mode: Option<f64>) -> Self {
        Self {
            cfg,
            coulomb_zero_mode,
            gs: std::cell::OnceCell::new(),
        }
    }

    /// Context around an already computed ground state.
    pub fn with_ground_state(cfg: RunConfig, gs: GroundState) -> Self {
        let ctx = Self::new(cfg, None);
        let _ = ctx.gs.set(gs);
        ctx
    }

    pub fn gs(&self) -> CliResult<&GroundState> {
        if let Some(g) = self.gs.get() {
            return Ok(g);
        }
        let r = resolve_gs(&self.cfg)?;
        Ok(self.gs.get_or_init(|| r.gs))
    }

    fn ops(&self, grid: Grid3) -> Operators {
        let ops = Operators::new(grid);
        match self.coulomb_zero_mode {
            Some(v) => ops.with_coulomb_zero_mode(v),
            None => ops,
        }
    }
}

fn suite_operators(_: &VerifyContext) -> Vec<Check> {
    vec![Check::run("operators.plane-wave", || {
        let g = Grid3::new(64, 16.0)?;
        let e = plane_wave_error(g, 0.0)?.max(plane_wave_error(g, 1.3)?);
        Ok((e < 1e-12, format!("max relative error {e:.2e}")))
    })]
}

fn suite_coulomb(ctx: &VerifyContext) -> Vec<Check> {
    let g = Grid3::new(64, 16.0);
    let values = g.map_err(CliError::from).and_then(|g| gaussian_coulomb(&ctx.ops(g)));
    let pick = |i: usize| -> CliResult<f64> {
        match &values {
            Ok(v) => Ok(if i == 0 { v.0 } else { v.1 }),
            Err(e) => Err(CliError::Config(e.to_string())),
        }
    };
    vec![
        Check::run("coulomb.gaussian-phi0", || {
            let phi0 = pick(0)?;
            let e = rel(phi0, GAUSSIAN_PHI0);
            Ok((
                e < 0.01,
                format!("phi(0) = {phi0:.6}, exact {GAUSSIAN_PHI0:.6}, relative error {e:.2e}"),
            ))
        }),
        Check::run("coulomb.gaussian-self-energy", || {
            let d = pick(1)?;
            let e = rel(d, GAUSSIAN_SELF_ENERGY);
            Ok((
                e < 0.01,
                format!("D = {d:.6}, exact {GAUSSIAN_SELF_ENERGY:.6}, relative error {e:.2e}"),
            ))
        }),
    ]
}

fn suite_gs(ctx: &VerifyContext) -> Vec<Check> {
    vec![
        Check::run("gs.identities", || {
            let gs = ctx.gs()?;
            Ok((
                gs.identity_residual < 1e-3,
                format!("a* = {:.8}, pairwise gap {:.2e}", gs.a_star, gs.identity_residual),
            ))
        }),
        Check::run("gs.el-residual", || {
            let gs = ctx.gs()?;
            Ok((gs.el_residual < 1e-3, format!("residual {:.2e}", gs.el_residual)))
        }),
        Check::run("gs.positivity", || {
            let gs = ctx.gs()?;
            let ratio = gs.q.min() / gs.q.max();
            Ok((ratio >= -1e-8, format!("min/max = {ratio:.2e}")))
        }),
    ]
}

fn suite_gn(ctx: &VerifyContext) -> Vec<Check> {
    vec![
        Check::run("gn.quotient-at-q", || {
            let gs = ctx.gs()?;
            let w = weinstein_quotient(&Operators::new(*gs.grid()), &gs.q)?;
            let e = rel(w, gs.a_star / 2.0);
            Ok((e < 1e-3, format!("W(Q) = {w:.8}, a*/2 = {:.8}", gs.a_star / 2.0)))
        }),
        Check::run("gn.random-trials", || {
            let gs = ctx.gs()?;
            let ops = Operators::new(*gs.grid());
            let floor = gs.a_star / 2.0 * (1.0 - 1e-6);
            let mut lowest = f64::INFINITY;
            for u in random_trials(*gs.grid(), 20, 7)? {
                lowest = lowest.min(weinstein_quotient(&ops, &u)?);
            }
            Ok((
                lowest >= floor,
                format!("lowest of 20 trials {lowest:.6}, floor {floor:.6}"),
            ))
        }),
    ]
}

fn eta_check(
    ctx: &VerifyContext,
    x1: f64,
    x2: f64,
    beta: impl Fn(f64) -> f64,
    pass: impl Fn(f64) -> bool,
) -> CliResult<(bool, String)> {
    let gs = ctx.gs()?;
    let a = gs.a_star;
    let p = Params::new(x1 * a, x2 * a, beta(a), 0.0)?;
    let est = estimate_eta(&p, gs, *gs.grid(), &EtaOptions::default())?;
    Ok((
        pass(est.estimate),
        format!(
            "eta = {:.6} in [{:.6}, {:.6}] via {}",
            est.estimate, est.lower, est.upper, est.best_trial
        ),
    ))
}

fn suite_eta(ctx: &VerifyContext) -> Vec<Check> {
    vec![
        Check::run("eta.decoupled-half", || {
            eta_check(ctx, 0.5, 0.5, |_| 0.0, |e| rel(e, 2.0) < 0.02)
        }),
        Check::run("eta.forced-one", || {
            eta_check(ctx, 0.4, 0.4, |a| 0.6 * a, |e| rel(e, 1.0) < 0.02)
        }),
        Check::run("eta.strip-above-one", || {
            eta_check(ctx, 0.3, 0.6, |a| ((0.7 * a) * (0.4 * a)).sqrt(), |e| e > 1.0)
        }),
    ]
}

fn suite_classify(ctx: &VerifyContext) -> Vec<Check> {
    let table = |a2: &str| -> CliResult<(bool, String)> {
        let gs = ctx.gs()?;
        let mut cfg = ctx.cfg.clone();
        for (k, v) in [
            ("sweep_a1", "0.1:1.5:11"),
            ("sweep_a2", a2),
            ("sweep_beta", "0:1.5:11"),
            ("sweep_beta_unit", "astar"),
            ("sweep_eta", "false"),
            ("sweep_minimize", "false"),
        ] {
            cfg.set(k, v)?;
        }
        let rows = sweep_rows(&cfg, gs)?;
        let bad = table_mismatches(&rows, gs.a_star);
        Ok((
            bad.is_empty(),
            if bad.is_empty() {
                format!("{} rows match", rows.len())
            } else {
                bad.join("; ")
            },
        ))
    };
    vec![
        Check::run("classify.table-equal", || table("a1")),
        Check::run("classify.table-fixed", || table("0.6*astar")),
    ]
}

fn suite_minimizer(ctx: &VerifyContext) -> Vec<Check> {
    vec![
        Check::run("minimizer.existence", || {
            let res = existence_run(ctx.gs()?, ctx.cfg.grid()?)?;
            Ok(existence_verdict(&res, 1e-4))
        }),
        Check::run("minimizer.decoupled-single", || {
            let (pair, single, gap) = decoupled_gap(ctx.gs()?, ctx.cfg.grid()?)?;
            Ok((
                gap < 1e-3,
                format!("pair {pair:.10}, single {single:.10}, gap {gap:.2e}"),
            ))
        }),
    ]
}

fn suite_probes(ctx: &VerifyContext) -> Vec<Check> {
    vec![
        Check::run("probes.concentration-slope", || {
            let gs = ctx.gs()?;
            let (slope, expect, unbounded) = concentration_slope(gs, *gs.grid())?;
            let e = rel(slope, expect);
            Ok((
                e < 0.1 && slope < 0.0,
                format!("slope {slope:.4}, predicted {expect:.4}, unbounded {unbounded}"),
            ))
        }),
        Check::run("probes.scaling-unbounded", || {
            let (slope, unbounded) = scaling_unbounded(ctx.gs()?)?;
            Ok((unbounded, format!("slope {slope:.4}")))
        }),
        Check::run("probes.supercritical-diverges", || {
            let res = supercritical_run(ctx.gs()?, ctx.cfg.grid()?)?;
            Ok((
                res.diverged,
                format!("status {} after {} iterations", res.status(), res.iterations),
            ))
        }),
    ]
}

fn suite_appendix(ctx: &VerifyContext) -> Vec<Check> {
    let (a, beta) = (1.0, 0.5);
    vec![
        Check::run("appendix.nehari", || {
            let gs = ctx.gs()?;
            let c = closed_form_coupled_gs(a, beta, gs, None)?;
            let (r1, r2) = nehari_residual(&Operators::new(*gs.grid()), &c.u0, &c.v0, a, beta)?;
            Ok((r1.max(r2) < 1e-3, format!("residuals {r1:.2e}, {r2:.2e}")))
        }),
        Check::run("appendix.pohozaev", || {
            let gs = ctx.gs()?;
            let c = closed_form_coupled_gs(a, beta, gs, None)?;
            let r = pohozaev_coupled_residual(&Operators::new(*gs.grid()), &c.u0, &c.v0, a, beta)?;
            Ok((r < 1e-3, format!("residual {r:.2e}")))
        }),
        Check::run("appendix.action", || {
            let gs = ctx.gs()?;
            let c = closed_form_coupled_gs(a, beta, gs, None)?;
            let expect = 0.5 * gs.a_star * (c.k + c.l);
            Ok((
                rel(c.action, expect) < 1e-3,
                format!("action {:.8}, expected {expect:.8}", c.action),
            ))
        }),
        Check::run("appendix.theta-independence", || {
            let gs = ctx.gs()?;
            let ops = Operators::new(*gs.grid());
            let actions: Vec<f64> = [0.3, 0.7, 1.1, 2.0, 4.0]
                .iter()
                .map(|&t| {
                    let c = closed_form_coupled_gs(1.0, 1.0, gs, Some(t))?;
                    Ok(coupled_action(&ops, &c.u0, &c.v0, 1.0, 1.0)?)
                })
                .collect::<CliResult<_>>()?;
            let spread = actions.iter().fold(0.0f64, |m, x| m.max(rel(*x, actions[0])));
            Ok((spread < 1e-10, format!("relative spread {spread:.2e}")))
        }),
        Check::run("appendix.h-quotient", || {
            let gs = ctx.gs()?;
            let h = h_quotient(&Operators::new(*gs.grid()), &gs.q, &gs.q, a)?;
            let expect = gs.a_star / (2.0 * a);
            Ok((rel(h, expect) < 1e-3, format!("h(Q, Q) = {h:.8}, expected {expect:.8}")))
        }),
    ]
}

pub fn run_suite(name: &str, ctx: &VerifyContext) -> CliResult<Vec<Check>> {
    Ok(match name {
        "operators" => suite_operators(ctx),
        "coulomb" => suite_coulomb(ctx),
        "gs" => suite_gs(ctx),
        "gn" => suite_gn(ctx),
        "eta" => suite_eta(ctx),
        "classify" => suite_classify(ctx),
        "minimizer" => suite_minimizer(ctx),
        "probes" => suite_probes(ctx),
        "appendix" => suite_appendix(ctx),
        other => {
            return Err(CliError::Config(format!(
                "unknown suite '{other}'; known: {}",
                SUITES.join(", ")
            )))
        }
    })
}

/// Names of the injectable faults.
pub const FAULTS: &[&str] = &["coulomb-zero-mode"];

pub fn cmd_verify(cfg: &RunConfig, only: Option<&str>, inject: Option<&str>, out: &mut dyn Write) -> CliResult<()> {
    let zero_mode = match inject {
        None => None,
        Some("coulomb-zero-mode") => Some(0.0),
        Some(other) => {
            return Err(CliError::Config(format!(
                "unknown fault '{other}'; known: {}",
                FAULTS.join(", ")
            )))
        }
    };
    let suites: Vec<&str> = match only {
        Some(s) => s.split(',').map(str::trim).collect(),
        None => SUITES.to_vec(),
    };
    let ctx = VerifyContext::new(cfg.clone(), zero_mode);
    let start = Instant::now();
    let mut failed = Vec::new();
    let mut total = 0;
    writeln!(out, "# hartree-verify 1")?;
    for s in suites {
        for c in run_suite(s, &ctx)? {
            total += 1;
            writeln!(
                out,
                "{} {} ({:.2}s): {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.id,
                c.seconds,
                c.detail
            )?;
            if !c.passed {
                failed.push(c.id);
            }
        }
    }
    writeln!(
        out,
        "summary: {} passed, {} failed, runtime {:.1}s",
        total - failed.len(),
        failed.len(),
        start.elapsed().as_secs_f64()
    )?;
    write!(out, "{}", crate::commands::echo_config(cfg))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChecksFailed(format!("failed checks: {}", failed.join(", "))))
    }
}
