//! Experiment drivers: one function per subcommand, all writing into an
//! output directory and always leaving a manifest behind.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use cns_decay_core::continuum::{linear_decay_series, RadialProfileData};
use cns_decay_core::duhamel::{coupled_run, difference_decay_check, velocity_lower_bound_check, DifferenceSample};
use cns_decay_core::energy::{check_energy_inequality, weighted_dissipation_integral, EnergyRecorder, EnergyReport};
use cns_decay_core::fit::{self, Comparison, DecayFitResult};
use cns_decay_core::initial::{admissible_residual, generate, DataKind};
use cns_decay_core::solver::{simulate, Observer};
use cns_decay_core::{Error as CoreError, FluidParams, PerturbationState};
use serde_json::json;

use crate::artifacts::{self, Check, Checkpoint, FitRecord, Manifest, Table};
use crate::checkpoint;
use crate::config::{ConfigError, ExperimentKind, Resolved, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK: i32 = 4;

/// A failed stage with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub stage: &'static str,
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(stage: &'static str, code: i32, error: impl Into<anyhow::Error>) -> Self {
        Self {
            stage,
            code,
            error: error.into(),
        }
    }

    fn io(stage: &'static str, error: anyhow::Error) -> Self {
        Self::new(stage, EXIT_IO, error)
    }
}

/// Exit code for an error raised by the numerical kernels.
pub fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::Positivity { .. } | CoreError::NonFinite(_) | CoreError::Unstable { .. } | CoreError::Quadrature { .. } => {
            EXIT_NUMERICAL
        }
        _ => EXIT_CONFIG,
    }
}

fn core_failure(stage: &'static str, e: CoreError) -> Failure {
    Failure::new(stage, core_exit_code(&e), e)
}

/// Inputs shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub kind: ExperimentKind,
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub check: bool,
}

struct Ctx {
    out: PathBuf,
    manifest: Manifest,
    fits: Vec<FitRecord>,
}

impl Ctx {
    fn artifact(&mut self, name: &str) -> PathBuf {
        if !self.manifest.artifacts.iter().any(|a| a == name) {
            self.manifest.artifacts.push(name.into());
        }
        self.out.join(name)
    }

    fn columns(&mut self, file: &str, cols: &[&str]) {
        self.manifest
            .columns
            .insert(file.into(), cols.iter().map(|c| c.to_string()).collect());
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.manifest.checks.push(Check {
            name: name.into(),
            pass,
            detail,
        });
    }

    fn fit(&mut self, source: &str, r: &DecayFitResult) {
        self.fits.push(FitRecord::new(source, r));
    }

    fn write_fits(&mut self) -> Result<(), Failure> {
        let path = self.artifact(artifacts::FITS_JSONL);
        artifacts::write_fits(&path, &self.fits).map_err(|e| Failure::io("write", e))
    }
}

/// Runs one subcommand and returns the process exit code. The manifest is
/// written even when the run fails.
pub fn execute(inv: &Invocation) -> i32 {
    let start = Instant::now();
    let loaded = load_config(inv);
    let out = inv
        .out
        .clone()
        .or_else(|| loaded.as_ref().ok().map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut ctx = Ctx {
        out: out.clone(),
        manifest: Manifest::new(inv.kind.name()),
        fits: Vec::new(),
    };
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create output directory {}: {e}", out.display());
        return EXIT_IO;
    }
    let result = loaded
        .map_err(|e| Failure::new("config", EXIT_CONFIG, e))
        .and_then(|cfg| dispatch(inv, &cfg, &mut ctx));
    let code = match result {
        Ok(()) => {
            let failed: Vec<String> = ctx
                .manifest
                .checks
                .iter()
                .filter(|c| !c.pass)
                .map(|c| c.name.clone())
                .chain(
                    ctx.fits
                        .iter()
                        .filter(|f| !f.pass)
                        .map(|f| format!("fit {}:{}", f.source, f.quantity)),
                )
                .collect();
            if inv.check && !failed.is_empty() {
                ctx.manifest.status = "check-failed".into();
                ctx.manifest.failure_stage = Some("check".into());
                ctx.manifest.error = Some(format!("failed: {}", failed.join(", ")));
                eprintln!("check failed: {}", failed.join(", "));
                EXIT_CHECK
            } else {
                ctx.manifest.status = "ok".into();
                EXIT_OK
            }
        }
        Err(f) => {
            eprintln!("error ({}): {:#}", f.stage, f.error);
            ctx.manifest.status = "failed".into();
            ctx.manifest.failure_stage = Some(f.stage.into());
            ctx.manifest.error = Some(format!("{:#}", f.error));
            f.code
        }
    };
    ctx.manifest.exit_code = code;
    ctx.manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    let path = ctx.artifact(artifacts::MANIFEST_JSON);
    if let Err(e) = ctx.manifest.write(&path) {
        eprintln!("error: {e:#}");
        return if code == EXIT_OK { EXIT_IO } else { code };
    }
    code
}

fn load_config(inv: &Invocation) -> Result<RunConfig, ConfigError> {
    let mut cfg = match (&inv.config, inv.kind) {
        (Some(p), _) => RunConfig::load(p)?,
        // fit and report fall back to the configuration stored with the run
        (None, ExperimentKind::Fit | ExperimentKind::Report) => match &inv.out {
            Some(dir) if dir.join(artifacts::CONFIG_TOML).exists() => RunConfig::load(&dir.join(artifacts::CONFIG_TOML))?,
            _ => RunConfig::default(),
        },
        (None, _) => RunConfig::default(),
    };
    if let Some(seed) = inv.seed {
        cfg.initial.seed = seed;
    }
    if let Some(out) = &inv.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

fn dispatch(inv: &Invocation, cfg: &RunConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    if let Some(k) = cfg.kind {
        let stored_run = matches!(inv.kind, ExperimentKind::Fit | ExperimentKind::Report);
        if k != inv.kind && !stored_run {
            return Err(Failure::new(
                "config",
                EXIT_CONFIG,
                anyhow::anyhow!("kind: config declares `{}` but subcommand is `{}`", k.name(), inv.kind.name()),
            ));
        }
    }
    ctx.manifest.config_hash = Some(cfg.hash());
    ctx.manifest.seed = Some(cfg.initial.seed);
    match inv.kind {
        ExperimentKind::Fit => return refit(cfg, ctx),
        ExperimentKind::Report => return report(ctx),
        _ => {}
    }
    let resolved = cfg.validate().map_err(|e| Failure::new("config", EXIT_CONFIG, e))?;
    let cfg_path = ctx.artifact(artifacts::CONFIG_TOML);
    std::fs::write(&cfg_path, cfg.to_toml())
        .with_context(|| format!("writing {}", cfg_path.display()))
        .map_err(|e| Failure::io("write", e))?;
    match inv.kind {
        ExperimentKind::LinearDecay => linear_decay(cfg, &resolved, ctx),
        ExperimentKind::Simulate => simulate_run(cfg, &resolved, ctx),
        ExperimentKind::Difference => difference_run(cfg, &resolved, ctx),
        ExperimentKind::Fit | ExperimentKind::Report => unreachable!("handled above"),
    }
}

/// Decay target and comparison of the `L²` norms for the configured data.
fn l2_target(kind: &DataKind, eta: f64) -> (f64, Comparison) {
    match kind {
        DataKind::DensityFloor => (fit::TARGET_LOWER, Comparison::TwoSided),
        _ => (fit::target_eta(eta), Comparison::AtMost),
    }
}

fn fit_or_degenerate(
    quantity: &str,
    series: &[(f64, f64)],
    window: (f64, f64),
    target: f64,
    tol: f64,
    cmp: Comparison,
) -> cns_decay_core::Result<DecayFitResult> {
    let inside = series.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1);
    if series.iter().any(|(t, _)| *t >= window.0 && *t <= window.1) && inside.clone().all(|(_, v)| *v == 0.0) {
        return Ok(DecayFitResult::degenerate(quantity, window, target, tol, cmp, inside.count()));
    }
    fit::fit_power_law(quantity, series, window, target, tol, cmp)
}

fn generated(r: &Resolved, ctx: &mut Ctx) -> Result<cns_decay_core::initial::GeneratedData, Failure> {
    let data = generate(&r.initial, &r.grid).map_err(|e| core_failure("initial-data", e))?;
    ctx.manifest.info.insert("initial_kind".into(), json!(r.initial.kind.name()));
    ctx.manifest
        .info
        .insert("max_admissible_amplitude".into(), json!(finite(data.max_admissible_amplitude)));
    if let Some(level) = data.low_frequency_floor {
        ctx.manifest.info.insert("low_frequency_floor".into(), json!(level));
    }
    Ok(data)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

// ---------------------------------------------------------------- linear-decay

fn linear_decay(cfg: &RunConfig, r: &Resolved, ctx: &mut Ctx) -> Result<(), Failure> {
    let data = generated(r, ctx)?;
    let profile: RadialProfileData = data.profile.expect("generated data carries its profile");
    let times = fit::log_spaced(cfg.linear.t_start, cfg.linear.t_end, cfg.linear.samples);
    let l2 = linear_decay_series(&profile, &times, 0, &r.params).map_err(|e| core_failure("simulate", e))?;
    let grad = linear_decay_series(&profile, &times, 1, &r.params).map_err(|e| core_failure("simulate", e))?;
    let rows: Vec<[f64; 6]> = l2
        .iter()
        .zip(&grad)
        .map(|((t, a), (_, g))| [*t, a.rho, a.momentum, a.total(), g.rho, g.momentum])
        .collect();
    let path = ctx.artifact(artifacts::LINEAR_CSV);
    ctx.columns(artifacts::LINEAR_CSV, &artifacts::LINEAR_COLUMNS);
    artifacts::write_csv(
        &path,
        &artifacts::LINEAR_COLUMNS,
        rows.iter().map(|r| r.iter().map(|x| artifacts::real(*x)).collect()),
    )
    .map_err(|e| Failure::io("write", e))?;
    let table = Table::read(&path).map_err(|e| Failure::io("write", e))?;
    linear_fits(&table, cfg, r, ctx)?;
    ctx.write_fits()
}

fn linear_fits(table: &Table, cfg: &RunConfig, r: &Resolved, ctx: &mut Ctx) -> Result<(), Failure> {
    let window = (cfg.linear.t_start, cfg.linear.t_end);
    let eta = if matches!(r.initial.kind, DataKind::DensityFloor) {
        0.0
    } else {
        r.initial.eta
    };
    let src = artifacts::LINEAR_CSV;
    let tol = fit::CONTINUUM_TOLERANCE;
    let col = |name: &str| table.series(name).map_err(|e| Failure::io("fit", e));
    let add = |ctx: &mut Ctx, q: &str, s: &[(f64, f64)], target: f64, cmp: Comparison| -> Result<(), Failure> {
        let f = fit_or_degenerate(q, s, window, target, tol, cmp).map_err(|e| core_failure("fit", e))?;
        ctx.fit(src, &f);
        Ok(())
    };
    let rho = col("rho_l2")?;
    let m = col("m_l2")?;
    // upper bound for every data kind, lower bound for the density floor
    add(ctx, "rho_l", &rho, fit::target_eta(eta), Comparison::AtMost)?;
    add(ctx, "m_l", &m, fit::target_eta(eta), Comparison::AtMost)?;
    if matches!(r.initial.kind, DataKind::DensityFloor) {
        add(ctx, "rho_l", &rho, fit::TARGET_LOWER, Comparison::TwoSided)?;
        add(ctx, "m_l", &m, fit::TARGET_LOWER, Comparison::TwoSided)?;
    }
    let g = fit::target_gradient(r.energy.p);
    add(ctx, "grad_rho_l", &col("grad_rho_l2")?, g, Comparison::AtMost)?;
    add(ctx, "grad_m_l", &col("grad_m_l2")?, g, Comparison::AtMost)?;
    Ok(())
}

// ---------------------------------------------------------------- grid runs

/// Writes checkpoints at the first recorded time at or after each target.
struct Checkpointer {
    dir: PathBuf,
    params: FluidParams,
    targets: Vec<f64>,
    next: usize,
    written: Vec<Checkpoint>,
    error: Option<anyhow::Error>,
}

impl Checkpointer {
    fn new(dir: &Path, params: FluidParams, mut targets: Vec<f64>) -> Self {
        targets.sort_by(f64::total_cmp);
        Self {
            dir: dir.to_path_buf(),
            params,
            targets,
            next: 0,
            written: Vec::new(),
            error: None,
        }
    }
}

impl Observer for Checkpointer {
    fn observe(&mut self, state: &PerturbationState, _step: u64) -> cns_decay_core::Result<()> {
        if self.error.is_some() || self.next >= self.targets.len() || state.time() < self.targets[self.next] {
            return Ok(());
        }
        while self.next < self.targets.len() && self.targets[self.next] <= state.time() {
            self.next += 1;
        }
        let file = format!("checkpoint_{:03}.cnsd", self.written.len());
        match checkpoint::save(&self.dir.join(&file), state, &self.params) {
            Ok(()) => self.written.push(Checkpoint { file, t: state.time() }),
            Err(e) => self.error = Some(e),
        }
        Ok(())
    }
}

fn prepare_initial(cfg: &RunConfig, r: &Resolved, ctx: &mut Ctx) -> Result<PerturbationState, Failure> {
    let data = generated(r, ctx)?;
    let state = data.state;
    if let Ok(u) = state.velocity() {
        if let Ok(res) = admissible_residual(&r.grid, state.rho(), u, &r.params) {
            ctx.manifest.info.insert("admissible_residual".into(), json!(finite(res)));
        }
    }
    if cfg.output.dump_initial {
        let path = ctx.artifact("initial.cnsd");
        checkpoint::save(&path, &state, &r.params).map_err(|e| Failure::io("write", e))?;
    }
    Ok(state)
}

fn finish_checkpoints(cp: Checkpointer, ctx: &mut Ctx) -> Result<(), Failure> {
    for c in &cp.written {
        ctx.artifact(&c.file);
    }
    ctx.manifest.checkpoints = cp.written;
    match cp.error {
        Some(e) => Err(Failure::io("write", e)),
        None => Ok(()),
    }
}

fn dump_failure(state: &PerturbationState, r: &Resolved, ctx: &mut Ctx) {
    let path = ctx.artifact("failure.cnsd");
    if let Err(e) = checkpoint::save(&path, state, &r.params) {
        eprintln!("warning: could not dump failure state: {e:#}");
    }
}

fn write_energy(reports: &[EnergyReport], ctx: &mut Ctx) -> Result<(), Failure> {
    let cols = artifacts::energy_columns();
    let path = ctx.artifact(artifacts::ENERGY_CSV);
    ctx.columns(artifacts::ENERGY_CSV, &cols);
    artifacts::write_csv(&path, &cols, reports.iter().map(artifacts::energy_row)).map_err(|e| Failure::io("write", e))
}

fn energy_checks(reports: &[EnergyReport], r: &Resolved, ctx: &mut Ctx) {
    let (c1, cc1) = r.energy.equivalence_constants();
    let eq = reports.iter().all(|x| {
        let base = x.grad_u_h1.powi(2) + x.grad_rho_h1.powi(2);
        c1 * base <= x.e1_sq * (1.0 + 1e-12) + f64::MIN_POSITIVE && x.e1_sq <= cc1 * base * (1.0 + 1e-12) + f64::MIN_POSITIVE
    });
    ctx.check("energy-equivalence", eq, format!("c1 = {c1}, C1 = {cc1}"));
    let split = reports.iter().filter(|x| !x.split_ok()).count();
    ctx.check(
        "fourier-splitting",
        split == 0,
        format!("{split} of {} samples violate", reports.len()),
    );
    let floor = reports.iter().filter(|x| !x.floor_ok).count();
    ctx.check("density-floor", floor == 0, format!("{floor} samples below the floor"));
    match check_energy_inequality(reports, &r.energy) {
        Ok(q) => ctx.check(
            "energy-inequality",
            q.first_time_satisfied.is_some(),
            format!(
                "onset {:?}, {} violations before onset, max residual {:e}",
                q.first_time_satisfied, q.violations, q.max_violation
            ),
        ),
        Err(e) => ctx.check("energy-inequality", false, e.to_string()),
    }
    let d: Vec<(f64, f64)> = reports.iter().map(|x| (x.t, x.dissipation())).collect();
    match weighted_dissipation_integral(&d) {
        Ok(w) => ctx.check(
            "dissipation-plateau",
            w.plateau,
            format!(
                "last-decade growth {:e}, value {:e}",
                w.last_decade_growth,
                w.values.last().map_or(0.0, |v| v.1)
            ),
        ),
        Err(e) => ctx.check("dissipation-plateau", false, e.to_string()),
    }
}

fn energy_fits(table: &Table, cfg: &RunConfig, r: &Resolved, ctx: &mut Ctx) -> Result<(), Failure> {
    let Some([a, b]) = cfg.fit.window else { return Ok(()) };
    let (target, cmp) = l2_target(&r.initial.kind, r.initial.eta);
    for q in ["rho_l2", "u_l2"] {
        let s = table.series(q).map_err(|e| Failure::io("fit", e))?;
        let f = fit_or_degenerate(q, &s, (a, b), target, fit::GRID_TOLERANCE, cmp).map_err(|e| core_failure("fit", e))?;
        ctx.fit(artifacts::ENERGY_CSV, &f);
    }
    Ok(())
}

fn simulate_run(cfg: &RunConfig, r: &Resolved, ctx: &mut Ctx) -> Result<(), Failure> {
    let init = prepare_initial(cfg, r, ctx)?;
    let mut energy = EnergyRecorder::new(r.energy, r.solver.density_floor);
    let mut cp = Checkpointer::new(&ctx.out, r.params, cfg.output.checkpoint_times.clone());
    let outcome = simulate(&init, r.solver, r.params, &mut [&mut energy, &mut cp]).map_err(|e| core_failure("simulate", e))?;
    finish_checkpoints(cp, ctx)?;
    write_energy(&energy.reports, ctx)?;
    ctx.manifest.info.insert("steps".into(), json!(outcome.steps));
    ctx.manifest.info.insert("min_density".into(), json!(outcome.floor.minimum));
    if let Some(err) = outcome.failure {
        dump_failure(&outcome.last_good, r, ctx);
        ctx.write_fits()?;
        return Err(core_failure("simulate", err));
    }
    energy_checks(&energy.reports, r, ctx);
    let table = Table::read(&ctx.out.join(artifacts::ENERGY_CSV)).map_err(|e| Failure::io("fit", e))?;
    energy_fits(&table, cfg, r, ctx)?;
    ctx.write_fits()
}

fn difference_fits(samples: &[DifferenceSample], window: (f64, f64), ctx: &mut Ctx) -> Result<(), Failure> {
    let src = artifacts::DIFFERENCE_CSV;
    if samples.iter().all(|s| s.linear == 0.0) {
        ctx.check("difference-gap", false, "zero data: no exponents".into());
        return Ok(());
    }
    let d = difference_decay_check(samples, window).map_err(|e| core_failure("fit", e))?;
    for f in [&d.difference, &d.linear, &d.full] {
        ctx.fit(src, f);
    }
    ctx.check(
        "difference-gap",
        d.pass,
        format!(
            "difference {:.4}, linear {:.4}, full {:.4}, gap {:.4} (need >= {})",
            d.difference.exponent,
            d.linear.exponent,
            d.full.exponent,
            d.gap,
            cns_decay_core::duhamel::EXPONENT_GAP
        ),
    );
    let v = velocity_lower_bound_check(samples, window).map_err(|e| core_failure("fit", e))?;
    ctx.fit(src, &v.fit);
    ctx.check(
        "velocity-lower-bound",
        v.pass,
        format!("u exponent {:.4}, {} pointwise violations", v.fit.exponent, v.violations),
    );
    Ok(())
}

fn write_difference(samples: &[DifferenceSample], ctx: &mut Ctx) -> Result<(), Failure> {
    let path = ctx.artifact(artifacts::DIFFERENCE_CSV);
    ctx.columns(artifacts::DIFFERENCE_CSV, &DifferenceSample::COLUMNS);
    artifacts::write_csv(&path, &DifferenceSample::COLUMNS, samples.iter().map(artifacts::difference_row))
        .map_err(|e| Failure::io("write", e))
}

fn difference_run(cfg: &RunConfig, r: &Resolved, ctx: &mut Ctx) -> Result<(), Failure> {
    let init = prepare_initial(cfg, r, ctx)?;
    let mut energy = EnergyRecorder::new(r.energy, r.solver.density_floor);
    let mut cp = Checkpointer::new(&ctx.out, r.params, cfg.output.checkpoint_times.clone());
    let series = coupled_run(&init, r.solver, r.params, &mut [&mut energy, &mut cp]).map_err(|e| core_failure("simulate", e))?;
    finish_checkpoints(cp, ctx)?;
    write_difference(&series.samples, ctx)?;
    write_energy(&energy.reports, ctx)?;
    if let Some(err) = series.failure {
        // the series ends at the last recorded sample; no state is kept to dump
        ctx.write_fits()?;
        return Err(core_failure("simulate", err));
    }
    if let Some([a, b]) = cfg.fit.window {
        let table = Table::read(&ctx.out.join(artifacts::DIFFERENCE_CSV)).map_err(|e| Failure::io("fit", e))?;
        let samples = table.difference_samples().map_err(|e| Failure::io("fit", e))?;
        difference_fits(&samples, (a, b), ctx)?;
    }
    ctx.write_fits()
}

// ---------------------------------------------------------------- fit / report

fn refit(cfg: &RunConfig, ctx: &mut Ctx) -> Result<(), Failure> {
    let r = cfg.validate().map_err(|e| Failure::new("config", EXIT_CONFIG, e))?;
    let mut found = false;
    let linear = ctx.out.join(artifacts::LINEAR_CSV);
    if linear.exists() {
        found = true;
        let t = Table::read(&linear).map_err(|e| Failure::io("fit", e))?;
        linear_fits(&t, cfg, &r, ctx)?;
    }
    let diff = ctx.out.join(artifacts::DIFFERENCE_CSV);
    let energy = ctx.out.join(artifacts::ENERGY_CSV);
    if diff.exists() {
        found = true;
        if let Some([a, b]) = cfg.fit.window {
            let t = Table::read(&diff).map_err(|e| Failure::io("fit", e))?;
            let samples = t.difference_samples().map_err(|e| Failure::io("fit", e))?;
            difference_fits(&samples, (a, b), ctx)?;
        }
    } else if energy.exists() {
        found = true;
        let t = Table::read(&energy).map_err(|e| Failure::io("fit", e))?;
        energy_fits(&t, cfg, &r, ctx)?;
    }
    if !found {
        return Err(Failure::new(
            "fit",
            EXIT_CONFIG,
            anyhow::anyhow!("no linear.csv, energy.csv or difference.csv in {}", ctx.out.display()),
        ));
    }
    ctx.write_fits()?;
    ctx.out = ctx.out.join("fit");
    std::fs::create_dir_all(&ctx.out).map_err(|e| Failure::io("write", e.into()))
}

fn report(ctx: &mut Ctx) -> Result<(), Failure> {
    let mpath = ctx.out.join(artifacts::MANIFEST_JSON);
    let prior = Manifest::read(&mpath).map_err(|e| Failure::new("report", EXIT_CONFIG, e))?;
    println!("run       {} ({})", prior.kind, prior.status);
    if let Some(stage) = &prior.failure_stage {
        println!("failed at {stage}: {}", prior.error.as_deref().unwrap_or(""));
    }
    println!("config    {}", prior.config_hash.as_deref().unwrap_or("-"));
    println!("wall time {:.2} s", prior.wall_time_seconds);
    let fpath = ctx.out.join(artifacts::FITS_JSONL);
    let fits = if fpath.exists() {
        artifacts::read_fits(&fpath).map_err(|e| Failure::io("report", e))?
    } else {
        Vec::new()
    };
    if !fits.is_empty() {
        println!(
            "\n{:<16} {:<14} {:>10} {:>10} {:>10}  {:<9} result",
            "source", "quantity", "exponent", "target", "tol", "compare"
        );
        for f in &fits {
            let e = f.exponent.map_or("-".into(), |e| format!("{e:.4}"));
            println!(
                "{:<16} {:<14} {:>10} {:>10.4} {:>10.3}  {:<9} {}",
                f.source,
                f.quantity,
                e,
                f.target,
                f.tolerance,
                f.comparison,
                if f.pass { "pass" } else { "FAIL" }
            );
        }
    }
    if !prior.checks.is_empty() {
        println!();
        for c in &prior.checks {
            println!("{:<22} {}  {}", c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
        }
    }
    ctx.manifest.kind = format!("report:{}", prior.kind);
    for c in prior.checks {
        ctx.manifest.checks.push(c);
    }
    ctx.fits = fits;
    if prior.status != "ok" {
        ctx.check("prior-run", false, format!("status {}", prior.status));
    }
    // the report manifest goes next to, not over, the run manifest
    ctx.out = ctx.out.join("report");
    std::fs::create_dir_all(&ctx.out).map_err(|e| Failure::io("write", e.into()))?;
    Ok(())
}
