//! The subcommands. Each writes its report to `out` and returns an error
//! carrying the exit code when the run did not succeed.

use std::fs;
use std::io::Write;
use std::path::Path;

use hartree_core::coupled_minimizer::{concentration_probe, minimize, MinimizeOptions, MinimizerResult, ProbeReport};
use hartree_core::energy_model::{
    classify, estimate_eta, thresholds, EtaOptions, Params, Rule, VerdictKind, VerdictRecord,
};
use hartree_core::{Field, Grid3, GroundState};
use rayon::prelude::*;

use crate::cache::{cache_dir, resolve_ground_state, Resolved};
use crate::config::{Range, RunConfig, SweepA2, Unit};
use crate::error::{CliError, CliResult};
use crate::potential::{build_potential, PotentialSpec, WellCouplings};

/// The config as `#`-prefixed lines, for embedding in records.
pub fn echo_config(cfg: &RunConfig) -> String {
    let mut s = String::from("# resolved config\n");
    for line in cfg.to_text().lines() {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

pub fn resolve_gs(cfg: &RunConfig) -> CliResult<Resolved> {
    resolve_ground_state(
        &cache_dir(),
        cfg.gs_grid()?,
        cfg.f64("gs_tol")?,
        cfg.usize("gs_max_iter")?,
    )
}

fn prepare_output(cfg: &RunConfig) -> CliResult<std::path::PathBuf> {
    let dir = cfg.output();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("resolved.conf"), cfg.to_text())?;
    Ok(dir)
}

pub fn cmd_ground_state(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let r = resolve_gs(cfg)?;
    let gs = &r.gs;
    let g = gs.grid();
    writeln!(out, "# hartree-ground-state 1")?;
    writeln!(out, "a_star: {:?}", gs.a_star)?;
    writeln!(out, "n: {}", g.n())?;
    writeln!(out, "box_length: {:?}", g.box_length())?;
    writeln!(out, "weinstein_min: {:?}", gs.weinstein_min)?;
    writeln!(out, "identity_residual: {:?}", gs.identity_residual)?;
    writeln!(out, "pohozaev_residual: {:?}", gs.pohozaev_residual)?;
    writeln!(out, "el_residual: {:?}", gs.el_residual)?;
    writeln!(out, "decay_constant: {:?}", gs.decay_constant)?;
    writeln!(out, "coulomb_decay_constant: {:?}", gs.coulomb_decay_constant)?;
    writeln!(out, "iterations: {}", gs.iterations)?;
    writeln!(out, "cache: {}", r.path.display())?;
    writeln!(out, "from_cache: {}", r.from_cache)?;
    write!(out, "{}", echo_config(cfg))?;
    Ok(())
}

/// Both potentials on `grid`, with warnings for non-trapping choices.
pub fn build_potentials(
    cfg: &RunConfig,
    grid: Grid3,
    a_star: f64,
    p: &Params,
) -> CliResult<([PotentialSpec; 2], [Field; 2], Vec<String>)> {
    let specs = [
        PotentialSpec::parse(cfg.get("v1"))?,
        PotentialSpec::parse(cfg.get("v2"))?,
    ];
    let wc = WellCouplings {
        a_star,
        beta: p.beta,
        m: p.m,
    };
    let v1 = build_potential(&specs[0], grid, 0, &wc)?;
    let v2 = build_potential(&specs[1], grid, 1, &wc)?;
    let warnings = specs
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_trapping())
        .map(|(i, _)| format!("v{} is the zero potential and does not trap", i + 1))
        .collect();
    Ok((specs, [v1, v2], warnings))
}

fn argmin(v: &Field) -> [f64; 3] {
    let mut best = (0, f64::INFINITY);
    for (i, &x) in v.values().iter().enumerate() {
        if x < best.1 {
            best = (i, x);
        }
    }
    v.grid().point(best.0)
}

pub fn minimize_options(
    cfg: &RunConfig,
    a_star: f64,
    specs: &[PotentialSpec; 2],
    v: &[Field; 2],
) -> CliResult<MinimizeOptions> {
    let mut centers = [[0.0; 3]; 2];
    for i in 0..2 {
        centers[i] = match cfg.seed(&format!("seed{}", i + 1))? {
            Some(c) => c,
            None => specs[i].well_center(i).unwrap_or_else(|| argmin(&v[i])),
        };
    }
    Ok(MinimizeOptions {
        tol_e: cfg.f64("tol_e")?,
        tol_r: cfg.f64("tol_r")?,
        max_iter: cfg.usize("max_iter")?,
        energy_floor: cfg.f64("energy_floor")?,
        initial_step: cfg.f64("initial_step")?,
        seed_centers: Some(centers),
        a_star: Some(a_star),
        ..MinimizeOptions::default()
    })
}

/// Runs the coupled minimization described by `cfg`.
pub fn run_minimization(cfg: &RunConfig, gs: &GroundState) -> CliResult<(MinimizerResult, [Field; 2], Vec<String>)> {
    let grid = cfg.grid()?;
    let p = cfg.params(gs.a_star)?;
    let (specs, v, mut warnings) = build_potentials(cfg, grid, gs.a_star, &p)?;
    let opts = minimize_options(cfg, gs.a_star, &specs, &v)?;
    let mut res = minimize(&v[0], &v[1], &p, grid, &opts)?;
    if let Some(w) = res.warning.take() {
        warnings.insert(0, w);
    }
    if !warnings.is_empty() {
        res.warning = Some(warnings.join("; "));
    }
    Ok((res, v, warnings))
}

fn write_trace(path: &Path, res: &MinimizerResult) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "energy", "step", "residual"])?;
    for (i, t) in res.trace.iter().enumerate() {
        w.write_record([
            i.to_string(),
            format!("{:?}", t.energy),
            format!("{:?}", t.step),
            format!("{:?}", t.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_probe(path: &Path, report: &ProbeReport) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([report.parameter, "energy"])?;
    for (x, e) in report.rows() {
        w.write_record([format!("{x:?}"), format!("{e:?}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Concentration probe at the minimum of `V₁ + V₂` after a divergence.
fn divergence_probe(cfg: &RunConfig, gs: &GroundState, v: &[Field; 2], p: &Params, dir: &Path) -> String {
    let attempt = || -> CliResult<ProbeReport> {
        let sum = v[0].axpy(1.0, &v[1])?;
        let x0 = argmin(&sum);
        let radii = Range::parse(cfg.get("probe_radii"))?.values();
        let report = concentration_probe(gs, &v[0], &v[1], p, x0, &radii)?;
        write_probe(&dir.join("probe_concentration.csv"), &report)?;
        Ok(report)
    };
    match attempt() {
        Ok(r) => format!(
            "concentration probe slope {:.4} (unbounded below: {}), written to {}",
            r.slope,
            r.unbounded_below,
            dir.join("probe_concentration.csv").display()
        ),
        Err(e) => format!("concentration probe unavailable: {e}"),
    }
}

pub fn cmd_minimize(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let r = resolve_gs(cfg)?;
    let dir = prepare_output(cfg)?;
    let (res, v, warnings) = run_minimization(cfg, &r.gs)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let record = format!("{res}{}", echo_config(cfg));
    fs::write(dir.join("result.txt"), &record)?;
    res.save(&dir.join("result.bin"))?;
    write_trace(&dir.join("trace.csv"), &res)?;
    write!(out, "{record}")?;
    if res.diverged {
        let probe = divergence_probe(cfg, &r.gs, &v, &res.params, &dir);
        return Err(CliError::Diverged(format!(
            "energy diverged after {} iterations: no minimizer at these parameters is the likely cause; {probe}; \
             run `hartree-min verify --only probes` for the scaling and concentration checks",
            res.iterations
        )));
    }
    if !res.converged {
        return Err(CliError::NotConverged(format!(
            "no convergence after {} iterations (residuals {:e}, {:e})",
            res.iterations, res.el_residual1, res.el_residual2
        )));
    }
    Ok(())
}

fn eta_options(cfg: &RunConfig) -> CliResult<EtaOptions> {
    Ok(EtaOptions {
        refine_iters: cfg.usize("eta_refine_iters")?,
        ..EtaOptions::default()
    })
}

/// Classifies `p`; `η` is estimated only where the rules need it.
pub fn classify_point(p: &Params, gs: &GroundState, eta: Option<&EtaOptions>) -> CliResult<VerdictRecord> {
    let t = thresholds(p.a1, p.a2, gs.a_star)?;
    let mut v = classify(p, &t, None);
    if let (Some(opts), Rule::StripUndecided) = (eta, v.rule) {
        let est = estimate_eta(p, gs, *gs.grid(), opts)?;
        v = classify(p, &t, Some(est.estimate));
    }
    Ok(VerdictRecord::new(*p, t, v))
}

pub fn cmd_classify(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let r = resolve_gs(cfg)?;
    let p = cfg.params(r.gs.a_star)?;
    let opts = if cfg.bool("eta")? {
        Some(eta_options(cfg)?)
    } else {
        None
    };
    let rec = classify_point(&p, &r.gs, opts.as_ref())?;
    write!(out, "{rec}{}", echo_config(cfg))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub a1: f64,
    pub a2: f64,
    pub beta: Option<f64>,
    pub outcome: Result<RowData, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowData {
    pub record: VerdictRecord,
    pub energy: Option<f64>,
    pub status: Option<String>,
}

pub const SWEEP_HEADER: [&str; 15] = [
    "index",
    "a1",
    "a2",
    "beta",
    "a1_over_astar",
    "beta_low",
    "beta_high",
    "verdict",
    "rule",
    "eta_lower",
    "eta_upper",
    "eta_estimate",
    "energy",
    "minimize_status",
    "error",
];

impl SweepRow {
    pub fn fields(&self, a_star: f64) -> Vec<String> {
        let f = |x: f64| format!("{x:?}");
        let o = |x: Option<f64>| x.map(f).unwrap_or_default();
        let mut row = vec![
            self.index.to_string(),
            f(self.a1),
            f(self.a2),
            o(self.beta),
            f(self.a1 / a_star),
        ];
        match &self.outcome {
            Ok(d) => {
                let r = &d.record;
                row.extend([
                    o(r.thresholds.beta_low),
                    f(r.thresholds.beta_high),
                    r.verdict.kind.to_string(),
                    r.verdict.rule.to_string(),
                    o(r.eta_lower),
                    o(r.eta_upper),
                    o(r.verdict.eta_estimate),
                    o(d.energy),
                    d.status.clone().unwrap_or_default(),
                    String::new(),
                ]);
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 9));
                row.push(e.clone());
            }
        }
        row
    }
}

/// The `(a₁, a₂, β-factor)` points of the sweep, in output order.
pub fn sweep_points(cfg: &RunConfig, a_star: f64) -> CliResult<Vec<(f64, f64, f64)>> {
    let a1s = Range::parse(cfg.get("sweep_a1"))?.values();
    let betas = Range::parse(cfg.get("sweep_beta"))?.values();
    let a2 = SweepA2::parse(cfg.get("sweep_a2"))?;
    let mut pts = Vec::with_capacity(a1s.len() * betas.len());
    for &x in &a1s {
        let a1 = x * a_star;
        let a2v = a2.resolve(a1, a_star)?;
        for &b in &betas {
            pts.push((a1, a2v, b));
        }
    }
    Ok(pts)
}

fn sweep_row(cfg: &RunConfig, gs: &GroundState, index: usize, (a1, a2, bf): (f64, f64, f64)) -> SweepRow {
    let a_star = gs.a_star;
    let mut row = SweepRow {
        index,
        a1,
        a2,
        beta: None,
        outcome: Err(String::new()),
    };
    let body = |row: &mut SweepRow| -> CliResult<RowData> {
        let unit = Unit::parse(cfg.get("sweep_beta_unit"))?;
        let beta = bf * unit.size(a1, a2, a_star)?;
        row.beta = Some(beta);
        let p = Params::new(a1, a2, beta, cfg.f64("m")?)?;
        let opts = if cfg.bool("sweep_eta")? {
            Some(eta_options(cfg)?)
        } else {
            None
        };
        let record = classify_point(&p, gs, opts.as_ref())?;
        let (mut energy, mut status) = (None, None);
        if cfg.bool("sweep_minimize")? {
            let mut point = cfg.clone();
            point.set("a1", &format!("{a1:?}"))?;
            point.set("a2", &format!("{a2:?}"))?;
            point.set("beta", &format!("{beta:?}"))?;
            let (res, ..) = run_minimization(&point, gs)?;
            energy = Some(res.energy);
            status = Some(res.status().to_string());
        }
        Ok(RowData { record, energy, status })
    };
    row.outcome = body(&mut row).map_err(|e| e.to_string());
    row
}

/// Rows computed concurrently on `jobs` threads; order follows the points.
pub fn sweep_rows(cfg: &RunConfig, gs: &GroundState) -> CliResult<Vec<SweepRow>> {
    let pts = sweep_points(cfg, gs.a_star)?;
    let jobs = cfg.usize("jobs")?.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(|| {
        pts.into_par_iter()
            .enumerate()
            .map(|(i, pt)| sweep_row(cfg, gs, i, pt))
            .collect()
    }))
}

pub fn write_sweep(rows: &[SweepRow], a_star: f64, w: impl Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record(r.fields(a_star))?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_sweep(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let r = resolve_gs(cfg)?;
    let dir = prepare_output(cfg)?;
    let rows = sweep_rows(cfg, &r.gs)?;
    let mut buf = Vec::new();
    write_sweep(&rows, r.gs.a_star, &mut buf)?;
    fs::write(dir.join("sweep.csv"), &buf)?;
    out.write_all(&buf)?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} rows failed; see the error column", rows.len());
    }
    Ok(())
}

/// True for verdicts that claim existence or nonexistence.
pub fn is_decided(kind: VerdictKind) -> bool {
    matches!(kind, VerdictKind::ExistsMinimizer | VerdictKind::NoMinimizer)
}
