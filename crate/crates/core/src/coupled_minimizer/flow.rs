use rayon::prelude::*;

use super::result::MinimizerResult;
use crate::energy_model::{check_potential, classify, thresholds, total_energy, Params, VerdictKind};
use crate::error::{Error, Result};
use crate::nonlocal_operators::{FieldTerms, KineticSpec, Operators};
use crate::spectral_field::{inner_product, normalize_mass, sample, Field, Grid3};

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    /// Relative energy change required for convergence.
    pub tol_e: f64,
    /// Euler-Lagrange residual required for convergence.
    pub tol_r: f64,
    pub max_iter: usize,
    pub energy_floor: f64,
    pub initial_step: f64,
    /// Seed centers; defaults to the minimum of each potential.
    pub seed_centers: Option<[[f64; 3]; 2]>,
    /// Explicit seeds, overriding `seed_centers`.
    pub seeds: Option<(Field, Field)>,
    /// Critical constant for the regime check that attaches warnings.
    pub a_star: Option<f64>,
    /// Collapse is declared once a component's mean wavenumber
    /// `T/M` passes this fraction of the Nyquist wavenumber.
    pub collapse_fraction: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol_e: 1e-10,
            tol_r: 1e-4,
            max_iter: 20_000,
            energy_floor: -1e6,
            initial_step: 0.1,
            seed_centers: None,
            seeds: None,
            a_star: None,
            collapse_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub energy: f64,
    pub step: f64,
    /// Largest Euler-Lagrange residual over the components.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SingleResult {
    pub u: Field,
    pub energy: f64,
    pub mu: f64,
    pub el_residual: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub diverged: bool,
}

/// Normalized Gaussian of width `L/8` centered at `center`.
pub fn gaussian_seed(grid: Grid3, center: [f64; 3]) -> Result<Field> {
    let w = grid.box_length() / 8.0;
    let u = sample(grid, |x| {
        let r2: f64 = (0..3).map(|d| (x[d] - center[d]).powi(2)).sum();
        (-r2 / (w * w)).exp()
    })?;
    normalize_mass(&u, 1.0)
}

fn argmin_point(v: &Field) -> [f64; 3] {
    let (idx, _) = v.values().iter().enumerate().fold(
        (0, f64::INFINITY),
        |best, (i, &x)| if x < best.1 { (i, x) } else { best },
    );
    v.grid().point(idx)
}

/// The energy of `n` components with self couplings `a` and a mutual
/// coupling `beta` (used only when `n = 2`).
struct Problem<'a> {
    ops: &'a Operators,
    v: Vec<&'a Field>,
    a: Vec<f64>,
    beta: f64,
    spec: KineticSpec,
}

struct State {
    u: Vec<Field>,
    terms: Vec<FieldTerms>,
    potential: Vec<f64>,
    cross: f64,
    energy: f64,
}

impl Problem<'_> {
    fn state(&self, u: Vec<Field>) -> Result<State> {
        let evaluated: Vec<Result<(FieldTerms, f64)>> = u
            .par_iter()
            .zip(self.v.par_iter())
            .map(|(ui, vi)| Ok((self.ops.terms(ui, self.spec)?, inner_product(vi, &ui.squared())?)))
            .collect();
        let mut terms = Vec::with_capacity(u.len());
        let mut potential = Vec::with_capacity(u.len());
        for e in evaluated {
            let (t, pot) = e?;
            terms.push(t);
            potential.push(pot);
        }
        let cross = if u.len() == 2 {
            self.ops.coulomb_pairing(&terms[0].rho, &terms[1].rho)
        } else {
            0.0
        };
        let mut energy = -self.beta * cross;
        for i in 0..u.len() {
            energy += terms[i].kinetic + potential[i] - 0.5 * self.a[i] * terms[i].hartree;
        }
        if !energy.is_finite() {
            return Err(Error::NonFiniteField("energy".into()));
        }
        Ok(State {
            u,
            terms,
            potential,
            cross,
            energy,
        })
    }

    /// `H_i u_i` for every component.
    fn el_fields(&self, s: &State) -> Result<Vec<Field>> {
        let n = s.u.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let other = (n == 2).then(|| &s.terms[1 - i].phi);
                let vals = s.terms[i]
                    .kinetic_u
                    .values()
                    .iter()
                    .zip(s.u[i].values())
                    .zip(self.v[i].values())
                    .enumerate()
                    .map(|(j, ((k, x), v))| {
                        let mut w = v - self.a[i] * s.terms[i].phi.values()[j];
                        if let Some(o) = other {
                            w -= self.beta * o.values()[j];
                        }
                        k + w * x
                    })
                    .collect();
                Field::from_values(*s.u[i].grid(), vals)
            })
            .collect()
    }

    fn multipliers(&self, s: &State) -> Vec<f64> {
        (0..s.u.len())
            .map(|i| s.terms[i].kinetic + s.potential[i] - self.a[i] * s.terms[i].hartree - self.beta * s.cross)
            .collect()
    }
}

struct FlowOutcome {
    state: State,
    mu: Vec<f64>,
    residuals: Vec<f64>,
    trace: Vec<TraceEntry>,
    converged: bool,
    diverged: bool,
    iterations: usize,
}

/// `S (1 + |k|)⁻¹ S` with `S = (1 + V)^{-1/2}`: the spectral factor tames
/// the kinetic term, the diagonal one a steep trap.
fn precondition(ops: &Operators, s: &Field, f: &Field) -> Result<Field> {
    let inner = ops.apply_multiplier(&f.mul(s)?, |k| 1.0 / (1.0 + k))?;
    inner.mul(s)
}

/// Preconditioned direction tangent to the unit sphere at `u`, and its
/// slope `-<g, d>`.
fn sphere_direction(ops: &Operators, s: &Field, u: &Field, g: &Field) -> Result<(Field, f64)> {
    let pg = precondition(ops, s, g)?;
    let pu = precondition(ops, s, u)?;
    let c = inner_product(&pg, u)? / inner_product(&pu, u)?;
    let pr = pg.axpy(-c, &pu)?;
    let slope = inner_product(g, &pr)?;
    Ok((pr.scaled(-1.0), slope))
}

fn run_flow(problem: &Problem, seeds: Vec<Field>, opts: &MinimizeOptions) -> Result<FlowOutcome> {
    const ARMIJO: f64 = 1e-4;
    let ops = problem.ops;
    let collapse_at = opts.collapse_fraction * ops.grid().nyquist_wavenumber();
    let seeds = seeds
        .iter()
        .map(|u| normalize_mass(u, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let scales: Vec<Field> = problem.v.iter().map(|v| v.map(|x| 1.0 / (1.0 + x).sqrt())).collect();
    let mut s = problem.state(seeds)?;
    let mut step = opts.initial_step;
    let mut trace = Vec::new();
    let mut last_change = f64::INFINITY;

    for it in 0..=opts.max_iter {
        let h = problem.el_fields(&s)?;
        let mu = problem.multipliers(&s);
        let residuals: Vec<f64> = h
            .iter()
            .zip(&s.u)
            .zip(&mu)
            .map(|((hi, ui), m)| hi.axpy(-m, ui).map(|r| r.l2_norm()))
            .collect::<Result<_>>()?;
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        trace.push(TraceEntry {
            energy: s.energy,
            step,
            residual: worst,
        });

        let collapsed = s.terms.iter().any(|t| t.quarter / t.mass > collapse_at);
        if s.energy < opts.energy_floor || collapsed {
            return Ok(FlowOutcome {
                state: s,
                mu,
                residuals,
                trace,
                converged: false,
                diverged: true,
                iterations: it,
            });
        }
        let done = |s: State, converged| FlowOutcome {
            state: s,
            mu: mu.clone(),
            residuals: residuals.clone(),
            trace: trace.clone(),
            converged,
            diverged: false,
            iterations: it,
        };
        if last_change < opts.tol_e && worst < opts.tol_r {
            return Ok(done(s, true));
        }
        if it == opts.max_iter {
            return Ok(done(s, false));
        }

        // gradient of E with respect to u_i is 2 H_i u_i
        let dirs: Vec<(Field, f64)> = h
            .iter()
            .zip(&s.u)
            .zip(&scales)
            .map(|((hi, ui), sc)| sphere_direction(ops, sc, ui, &hi.scaled(2.0)))
            .collect::<Result<_>>()?;
        let slope: f64 = dirs.iter().map(|d| d.1).sum();
        if !(slope > 0.0) {
            let ok = worst < opts.tol_r;
            return Ok(done(s, ok));
        }

        let mut accepted = None;
        while step > 1e-14 {
            let trial =
                s.u.iter()
                    .zip(&dirs)
                    .map(|(ui, (d, _))| normalize_mass(&ui.axpy(step, d)?, 1.0))
                    .collect::<Result<Vec<_>>>()?;
            let ts = problem.state(trial)?;
            if ts.energy <= s.energy - ARMIJO * step * slope {
                accepted = Some(ts);
                break;
            }
            step *= 0.5;
        }
        let Some(ts) = accepted else {
            // no decrease representable at working precision
            let ok = worst < opts.tol_r;
            return Ok(done(s, ok));
        };
        last_change = (s.energy - ts.energy).abs() / s.energy.abs().max(1.0);
        s = ts;
        step = (2.0 * step).min(100.0);
    }
    unreachable!("the loop returns at max_iter")
}

fn warning_for(p: &Params, a_star: Option<f64>) -> Option<String> {
    let a = a_star?;
    let t = thresholds(p.a1, p.a2, a).ok()?;
    let v = classify(p, &t, None);
    (v.kind != VerdictKind::ExistsMinimizer).then(|| {
        format!(
            "parameters classified {} ({}); a minimizer is not guaranteed",
            v.kind,
            v.rule.code()
        )
    })
}

/// Normalized gradient flow for the coupled energy: a preconditioned
/// gradient step on each component, then independent renormalization.
pub fn minimize(v1: &Field, v2: &Field, p: &Params, grid: Grid3, opts: &MinimizeOptions) -> Result<MinimizerResult> {
    p.validate()?;
    grid.ensure_same(v1.grid())?;
    grid.ensure_same(v2.grid())?;
    check_potential(v1, "V1")?;
    check_potential(v2, "V2")?;
    let ops = Operators::new(grid);
    let seeds = match &opts.seeds {
        Some((s1, s2)) => {
            grid.ensure_same(s1.grid())?;
            grid.ensure_same(s2.grid())?;
            vec![s1.clone(), s2.clone()]
        }
        None => {
            let [c1, c2] = opts.seed_centers.unwrap_or([argmin_point(v1), argmin_point(v2)]);
            vec![gaussian_seed(grid, c1)?, gaussian_seed(grid, c2)?]
        }
    };
    let problem = Problem {
        ops: &ops,
        v: vec![v1, v2],
        a: vec![p.a1, p.a2],
        beta: p.beta,
        spec: p.kinetic()?,
    };
    let out = run_flow(&problem, seeds, opts)?;
    let mut u = out.state.u.into_iter();
    let (u1, u2) = (
        orient(u.next().unwrap_or_else(|| Field::zeros(grid))),
        orient(u.next().unwrap_or_else(|| Field::zeros(grid))),
    );
    let energy = total_energy(&ops, &u1, &u2, v1, v2, p)?;
    let min_sample = (u1.min() / u1.max_abs()).min(u2.min() / u2.max_abs());
    Ok(MinimizerResult {
        u1,
        u2,
        energy,
        mu1: out.mu[0],
        mu2: out.mu[1],
        el_residual1: out.residuals[0],
        el_residual2: out.residuals[1],
        trace: out.trace,
        converged: out.converged,
        diverged: out.diverged,
        iterations: out.iterations,
        min_sample,
        params: *p,
        warning: warning_for(p, opts.a_star),
    })
}

/// The same flow with a single component: minimizes
/// `(sqrt(-Δ+m²)u, u) + ∫V u² - (a/2) D(u,u)` over unit-mass `u`.
pub fn minimize_single(v: &Field, a: f64, m: f64, grid: Grid3, opts: &MinimizeOptions) -> Result<SingleResult> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coupling {a} must be finite and nonnegative"
        )));
    }
    grid.ensure_same(v.grid())?;
    check_potential(v, "V")?;
    let ops = Operators::new(grid);
    let seed = match &opts.seeds {
        Some((s, _)) => s.clone(),
        None => gaussian_seed(grid, opts.seed_centers.map(|c| c[0]).unwrap_or(argmin_point(v)))?,
    };
    let problem = Problem {
        ops: &ops,
        v: vec![v],
        a: vec![a],
        beta: 0.0,
        spec: KineticSpec::new(m)?,
    };
    let out = run_flow(&problem, vec![seed], opts)?;
    Ok(SingleResult {
        u: orient(out.state.u.into_iter().next().unwrap_or_else(|| Field::zeros(grid))),
        energy: out.state.energy,
        mu: out.mu[0],
        el_residual: out.residuals[0],
        trace: out.trace,
        converged: out.converged,
        diverged: out.diverged,
    })
}

/// Flips the sign so that the field has positive total.
fn orient(u: Field) -> Field {
    if u.values().iter().sum::<f64>() < 0.0 {
        u.scaled(-1.0)
    } else {
        u
    }
}
