//! Command implementations. Each command validates its slice of the
//! configuration, drives the library, and writes report files into the
//! run's output directory.
//!
//! Failure taxonomy: everything that could have been caught by reading
//! the config (missing blocks, non-positive steps, unknown potential
//! keys, unreadable input files, mismatched cross-checks) is a
//! configuration error, exit code 2. Failures of the computation itself
//! (blow-up, non-convergence) are numerical failures, exit code 1; where
//! a partial result exists it is still written out for post-mortems.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use hylo_core::{
    bo_ground_state, charge_fkdv, charge_fns, energy, gn_exponents, hylomorphy_scan,
    localization_ratio, orbital_stability_experiment, run, snapshot_to_text, solution_from_text,
    solution_to_text, stationary_residual, trace_to_text, ChargeConvention, EvolutionConfig,
    EvolveError, Family, Field, GnExponents, GradientFlowOptions, Grid, Nonlinearity,
    Perturbation, PetviashviliOptions, SolitonSolution, SolutionRecord, SolveError, SolveMethod,
    StabilityError, StabilityOptions, LOCALIZATION_THRESHOLD,
};
use hylo_core::{find_soliton_gradient_flow, make_grid, petviashvili, stability_to_text};

use crate::config::{
    CommandKind, DiagnosticsConfig, EvolveConfig, FamilyKind, GridConfig, InitialConfig,
    ModelConfig, RunConfig, SolitonConfig, StabilityConfig,
};

/// A failed run, tagged with the exit-code class it belongs to.
#[derive(Debug)]
pub enum RunError {
    /// The configuration (or an input file it names) is unusable: exit 2.
    Config(String),
    /// The computation itself failed: exit 1.
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Numerical(m) => m,
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

fn config_err(msg: impl Into<String>) -> RunError {
    RunError::Config(msg.into())
}

/// Parses a config file; the returned base directory anchors every
/// relative path the config mentions.
pub fn load(path: &Path) -> RunResult<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| config_err(format!("cannot parse config {}: {e}", path.display())))?;
    let base = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((cfg, base))
}

/// Output directory of a loaded config, resolved against its base
/// directory. Sweep mode uses this to reject configs that would write
/// into the same place.
pub fn resolved_output_dir(cfg: &RunConfig, base: &Path) -> PathBuf {
    resolve(base, &cfg.output_dir)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads and runs a single config file, printing failures to stderr.
pub fn execute_config_file(path: &Path) -> i32 {
    match load(path) {
        Ok((cfg, base)) => run_loaded(&cfg, &base),
        Err(err) => {
            eprintln!("error: {}", err.message());
            eprintln!("usage: hylo <CONFIG.toml>  (or: hylo --sweep <CONFIG.toml>...)");
            err.exit_code()
        }
    }
}

/// Runs one parsed config. Returns the numeric exit code and prints the
/// failure reason (if any) to stderr.
pub fn run_loaded(cfg: &RunConfig, base: &Path) -> i32 {
    match dispatch(cfg, base) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            if matches!(err, RunError::Config(_)) {
                eprintln!("usage: hylo <CONFIG.toml>  (or: hylo --sweep <CONFIG.toml>...)");
            }
            err.exit_code()
        }
    }
}

fn dispatch(cfg: &RunConfig, base: &Path) -> RunResult<()> {
    let out_dir = resolved_output_dir(cfg, base);
    std::fs::create_dir_all(&out_dir).map_err(|e| {
        config_err(format!(
            "cannot create output directory {}: {e}",
            out_dir.display()
        ))
    })?;
    match cfg.command {
        CommandKind::Evolve => cmd_evolve(cfg, base, &out_dir),
        CommandKind::Soliton => cmd_soliton(cfg, base, &out_dir),
        CommandKind::Stability => cmd_stability(cfg, base, &out_dir),
        CommandKind::Diagnostics => cmd_diagnostics(cfg, base, &out_dir),
    }
}

// ---------------------------------------------------------------------
// shared pieces

fn require_grid(cfg: &RunConfig) -> RunResult<Grid> {
    let gc: &GridConfig = cfg
        .grid
        .as_ref()
        .ok_or_else(|| config_err("this command needs a [grid] block (length, points)"))?;
    make_grid(gc.length, gc.points).map_err(|e| config_err(format!("bad grid: {e}")))
}

fn require_model(cfg: &RunConfig) -> RunResult<&ModelConfig> {
    cfg.model
        .as_ref()
        .ok_or_else(|| config_err("this command needs a [model] block (family, s, nonlinearity)"))
}

/// Builds the potential named by the model block, with its optional
/// quadratic shift applied. Table paths are resolved against the config
/// directory.
fn build_potential(model: &ModelConfig, base: &Path) -> RunResult<Nonlinearity> {
    let key = model.nonlinearity.trim();
    let key = if let Some(path) = key
        .strip_prefix("table(")
        .and_then(|s| s.strip_suffix(')'))
    {
        format!("table({})", resolve(base, Path::new(path.trim())).display())
    } else {
        key.to_string()
    };
    let w = Nonlinearity::parse(&key).map_err(|e| config_err(format!("bad nonlinearity: {e}")))?;
    match model.quadratic {
        None => Ok(w),
        Some(c) if c.is_finite() => Ok(w.add_quadratic(c)),
        Some(c) => Err(config_err(format!(
            "quadratic coefficient must be finite, got {c}"
        ))),
    }
}

fn require_family(model: &ModelConfig) -> RunResult<FamilyKind> {
    model
        .family
        .ok_or_else(|| config_err("the [model] block needs a family (\"fkdv\" or \"fns\")"))
}

fn family_of(kind: FamilyKind) -> Family {
    match kind {
        FamilyKind::Fkdv => Family::Fkdv,
        FamilyKind::Fns => Family::Fns,
    }
}

fn convention_of(kind: FamilyKind) -> ChargeConvention {
    match kind {
        FamilyKind::Fkdv => ChargeConvention::Fkdv,
        FamilyKind::Fns => ChargeConvention::Fns,
    }
}

fn check_positive(name: &str, v: f64) -> RunResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive, got {v}")))
    }
}

/// Unix-seconds timestamp line prepended to every emitted file. The
/// parsers treat it as an ordinary unrecognized header, so files stay
/// byte-reproducible once this single line is dropped.
fn stamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# timestamp: {secs}\n")
}

fn emit(out_dir: &Path, name: &str, body: &str) -> RunResult<()> {
    let path = out_dir.join(name);
    let text = format!("{}{body}", stamp());
    std::fs::write(&path, text)
        .map_err(|e| RunError::Numerical(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Stride giving roughly `target` samples over an integration of
/// `steps` steps.
fn stride_for(steps: usize, target: usize) -> usize {
    (steps / target).max(1)
}

fn steps_of(dt: f64, t_end: f64) -> usize {
    (t_end / dt).round().max(1.0) as usize
}

// ---------------------------------------------------------------------
// evolve

fn cmd_evolve(cfg: &RunConfig, base: &Path, out_dir: &Path) -> RunResult<()> {
    let grid = require_grid(cfg)?;
    let model = require_model(cfg)?;
    let family_kind = require_family(model)?;
    let w = build_potential(model, base)?;
    let ev: &EvolveConfig = cfg
        .evolve
        .as_ref()
        .ok_or_else(|| config_err("the evolve command needs an [evolve] block"))?;
    check_positive("dt", ev.dt)?;
    check_positive("t_end", ev.t_end)?;

    let steps = steps_of(ev.dt, ev.t_end);
    let stride = match ev.snapshot_stride {
        Some(0) => return Err(config_err("snapshot_stride must be at least 1")),
        Some(k) => k,
        None => stride_for(steps, 10),
    };

    let u0 = initial_state(&ev.initial, &grid, family_kind, base)?;
    let run_cfg = EvolutionConfig {
        family: family_of(family_kind),
        s: model.s,
        w,
        grid,
        dt: ev.dt,
        t_end: ev.t_end,
        snapshot_stride: stride,
        dealias: ev.dealias,
    };

    match run(&run_cfg, &u0) {
        Ok(trace) => {
            print_warnings(&trace.warnings);
            emit(out_dir, "trace.txt", &trace_to_text(&trace))?;
            write_snapshots(out_dir, &trace.snapshots)?;
            Ok(())
        }
        Err(EvolveError::BlowUp {
            time,
            step,
            partial,
        }) => {
            print_warnings(&partial.warnings);
            emit(out_dir, "trace.txt", &trace_to_text(&partial))?;
            write_snapshots(out_dir, &partial.snapshots)?;
            Err(RunError::Numerical(format!(
                "blow-up at t = {time:.6} (step {step}); partial trace written to {}",
                out_dir.display()
            )))
        }
        Err(EvolveError::Core(e)) => Err(config_err(format!("evolution rejected the setup: {e}"))),
    }
}

fn write_snapshots(out_dir: &Path, snapshots: &[(f64, Field)]) -> RunResult<()> {
    for (index, (time, state)) in snapshots.iter().enumerate() {
        emit(
            out_dir,
            &format!("snapshot_{index:04}.txt"),
            &snapshot_to_text(*time, state),
        )?;
    }
    Ok(())
}

fn initial_state(
    init: &InitialConfig,
    grid: &Grid,
    family: FamilyKind,
    base: &Path,
) -> RunResult<Field> {
    let u = match init {
        InitialConfig::Zero => Field::sample_real(grid, |_| 0.0),
        InitialConfig::Gaussian { amplitude, width } => {
            if !amplitude.is_finite() {
                return Err(config_err(format!(
                    "gaussian amplitude must be finite, got {amplitude}"
                )));
            }
            check_positive("gaussian width", *width)?;
            let (a, w2) = (*amplitude, 2.0 * width * width);
            Field::sample_real(grid, move |x| a * (-(x * x) / w2).exp())
        }
        InitialConfig::Soliton { lambda, images } => bo_ground_state(grid, *lambda, *images)
            .map_err(|e| config_err(format!("bad soliton initial data: {e}")))?,
        InitialConfig::File { path } => {
            let full = resolve(base, path);
            let text = std::fs::read_to_string(&full).map_err(|e| {
                config_err(format!("cannot read initial state {}: {e}", full.display()))
            })?;
            let record = solution_from_text(&text).map_err(|e| {
                config_err(format!("cannot parse initial state {}: {e}", full.display()))
            })?;
            let profile = record.solution.profile;
            grid.same_as(profile.grid()).map_err(|_| {
                config_err(format!(
                    "initial state {} lives on a different grid than the [grid] block",
                    full.display()
                ))
            })?;
            profile
        }
    };
    match family {
        FamilyKind::Fkdv => {
            if !u.is_real() {
                return Err(config_err(
                    "the real family needs real initial data; this profile is complex",
                ));
            }
            Ok(u)
        }
        // The complex family accepts real profiles; promote them so the
        // evolution starts from the intended complex state.
        FamilyKind::Fns => Field::complex(u.grid(), u.values().to_vec())
            .map_err(|e| config_err(format!("cannot promote initial data: {e}"))),
    }
}

// ---------------------------------------------------------------------
// soliton

fn cmd_soliton(cfg: &RunConfig, base: &Path, out_dir: &Path) -> RunResult<()> {
    let grid = require_grid(cfg)?;
    let model = require_model(cfg)?;
    let family_kind = require_family(model)?;
    let convention = convention_of(family_kind);
    let w = build_potential(model, base)?;
    let sc: &SolitonConfig = cfg
        .soliton
        .as_ref()
        .ok_or_else(|| config_err("the soliton command needs a [soliton] block"))?;
    let method = resolve_method(sc)?;

    let outcome = match method {
        SolveMethod::GradientFlow => {
            let charge = sc
                .charge
                .ok_or_else(|| config_err("gradient_flow needs a charge target"))?;
            check_positive("charge", charge)?;
            let mut opts = GradientFlowOptions::default();
            if let Some(tol) = sc.tol {
                check_positive("tol", tol)?;
                opts.tol = tol;
            }
            if let Some(n) = sc.max_iter {
                opts.max_iter = n;
            }
            find_soliton_gradient_flow(&grid, charge, model.s, &w, convention, &opts)
        }
        SolveMethod::Petviashvili => {
            let lambda = sc
                .lambda
                .ok_or_else(|| config_err("petviashvili needs a lambda"))?;
            check_positive("lambda", lambda)?;
            let mut opts = PetviashviliOptions::default();
            if let Some(tol) = sc.tol {
                check_positive("tol", tol)?;
                opts.tol = tol;
            }
            if let Some(n) = sc.max_iter {
                opts.max_iter = n;
            }
            petviashvili(&grid, lambda, model.s, &w, convention, &opts)
        }
        SolveMethod::ExactProfile => {
            let sol = exact_profile_solution(cfg, model, sc, &grid, &w, convention)?;
            write_solution(out_dir, "solution.txt", model.s, &w, &sol)?;
            return Ok(());
        }
    };

    match outcome {
        Ok(sol) => write_solution(out_dir, "solution.txt", model.s, &w, &sol),
        Err(err) => {
            // A power-law degree outside the admissible window for this
            // dispersion order means no constrained minimizer need exist;
            // a failed search is then the expected finding, not a fault
            // of the run. Report it as a diagnostic and exit cleanly.
            let window_violated = w
                .homogeneity()
                .is_some_and(|p| !(p > 2.0 && p < 4.0 * model.s + 2.0));
            let best = match &err {
                SolveError::NotConverged { best, .. } | SolveError::NotLocalized { best, .. } => {
                    Some(best.as_ref())
                }
                _ => None,
            };
            match (window_violated, best) {
                (true, Some(best)) => {
                    let mut diagnosed = best.clone();
                    diagnosed.warnings.push(format!("search abandoned: {err}"));
                    write_solution(out_dir, "diagnostic.txt", model.s, &w, &diagnosed)
                }
                _ => Err(RunError::Numerical(format!("soliton search failed: {err}"))),
            }
        }
    }
}

fn resolve_method(sc: &SolitonConfig) -> RunResult<SolveMethod> {
    if let Some(name) = &sc.method {
        return name
            .parse::<SolveMethod>()
            .map_err(|e| config_err(format!("bad method: {e}")));
    }
    match (sc.charge.is_some(), sc.lambda.is_some()) {
        (true, false) => Ok(SolveMethod::GradientFlow),
        (false, true) => Ok(SolveMethod::Petviashvili),
        _ => Err(config_err(
            "the [soliton] block needs exactly one of charge (gradient flow) or \
             lambda (fixed point), or an explicit method",
        )),
    }
}

/// The closed-form algebraic profile, packaged with the same metrics the
/// iterative solvers report. Only the "bo" potential at dispersion order
/// 1/2 has this solution.
fn exact_profile_solution(
    cfg: &RunConfig,
    model: &ModelConfig,
    sc: &SolitonConfig,
    grid: &Grid,
    w: &Nonlinearity,
    convention: ChargeConvention,
) -> RunResult<SolitonSolution> {
    if w.key() != "bo" {
        return Err(config_err(format!(
            "exact_bo solves the \"bo\" potential only, not {:?}",
            w.key()
        )));
    }
    if model.s != 0.5 {
        return Err(config_err(format!(
            "exact_bo is a solution of the s = 0.5 model only, got s = {}",
            model.s
        )));
    }
    let _ = cfg; // the run seed plays no role in the closed form
    let lambda = sc
        .lambda
        .ok_or_else(|| config_err("exact_bo needs a lambda"))?;
    check_positive("lambda", lambda)?;
    let profile =
        bo_ground_state(grid, lambda, sc.images).map_err(|e| config_err(format!("{e}")))?;
    let multiplier = match convention {
        ChargeConvention::Fkdv => -lambda,
        ChargeConvention::Fns => -lambda / 2.0,
    };
    let charge = match convention {
        ChargeConvention::Fkdv => charge_fkdv(&profile),
        ChargeConvention::Fns => charge_fns(&profile),
    };
    let energy_value = energy(&profile, model.s, w)
        .map_err(|e| RunError::Numerical(format!("cannot evaluate the profile energy: {e}")))?;
    let residual_norm = stationary_residual(&profile, multiplier, model.s, w, convention)
        .map_err(|e| RunError::Numerical(format!("cannot evaluate the profile residual: {e}")))?;
    let localized = localization_ratio(&profile) >= LOCALIZATION_THRESHOLD;
    let mut warnings = Vec::new();
    if !localized {
        warnings.push(
            "profile fails the localization test; the box is too small for this lambda".into(),
        );
    }
    Ok(SolitonSolution {
        profile,
        multiplier,
        convention,
        charge,
        energy: energy_value,
        residual_norm,
        iterations: 0,
        method: SolveMethod::ExactProfile,
        localized,
        warnings,
    })
}

fn write_solution(
    out_dir: &Path,
    name: &str,
    s: f64,
    w: &Nonlinearity,
    sol: &SolitonSolution,
) -> RunResult<()> {
    print_warnings(&sol.warnings);
    let record = SolutionRecord {
        s,
        potential: w.key().to_string(),
        solution: sol.clone(),
    };
    emit(out_dir, name, &solution_to_text(&record))
}

// ---------------------------------------------------------------------
// stability

fn cmd_stability(cfg: &RunConfig, base: &Path, out_dir: &Path) -> RunResult<()> {
    let st: &StabilityConfig = cfg
        .stability
        .as_ref()
        .ok_or_else(|| config_err("the stability command needs a [stability] block"))?;
    if !(st.epsilon.is_finite() && (0.0..=0.1).contains(&st.epsilon)) {
        return Err(config_err(format!(
            "epsilon must lie in [0, 0.1], got {}",
            st.epsilon
        )));
    }
    check_positive("dt", st.dt)?;
    check_positive("t_end", st.t_end)?;

    let solution_path = resolve(base, &st.solution);
    let text = std::fs::read_to_string(&solution_path).map_err(|e| {
        config_err(format!(
            "cannot read solution {}: {e}",
            solution_path.display()
        ))
    })?;
    let record = solution_from_text(&text).map_err(|e| {
        config_err(format!(
            "cannot parse solution {}: {e}",
            solution_path.display()
        ))
    })?;
    let w = Nonlinearity::parse(&record.potential).map_err(|e| {
        config_err(format!(
            "solution {} names a potential this build cannot rebuild: {e}",
            solution_path.display()
        ))
    })?;
    check_consistency(cfg, base, &record)?;

    let steps = steps_of(st.dt, st.t_end);
    let opts = StabilityOptions {
        epsilon: st.epsilon,
        t_end: st.t_end,
        dt: st.dt,
        snapshot_stride: match st.snapshot_stride {
            Some(0) => return Err(config_err("snapshot_stride must be at least 1")),
            Some(k) => k,
            None => stride_for(steps, 50),
        },
    };
    let perturbation = Perturbation::Seed(cfg.seed);

    match orbital_stability_experiment(&record.solution, record.s, &w, &perturbation, &opts) {
        Ok(report) => emit(out_dir, "stability.txt", &stability_to_text(&report)),
        Err(StabilityError::BlowUp { time, partial }) => {
            emit(out_dir, "stability.txt", &stability_to_text(&partial))?;
            Err(RunError::Numerical(format!(
                "perturbed evolution blew up at t = {time:.6}; partial report written to {}",
                out_dir.display()
            )))
        }
        Err(StabilityError::Core(e)) => Err(RunError::Numerical(format!(
            "stability experiment failed: {e}"
        ))),
    }
}

/// A stability config may restate [grid] and [model]; when it does, they
/// must agree with the stored solution — silently running a different
/// model than the config claims would poison a sweep.
fn check_consistency(cfg: &RunConfig, base: &Path, record: &hylo_core::SolutionRecord) -> RunResult<()> {
    if let Some(gc) = &cfg.grid {
        let grid = record.solution.profile.grid();
        if gc.length != grid.length() || gc.points != grid.points() {
            return Err(config_err(format!(
                "[grid] ({}, {}) disagrees with the stored solution's grid ({}, {})",
                gc.length,
                gc.points,
                grid.length(),
                grid.points()
            )));
        }
    }
    if let Some(model) = &cfg.model {
        if model.s != record.s {
            return Err(config_err(format!(
                "[model] s = {} disagrees with the stored solution's s = {}",
                model.s, record.s
            )));
        }
        let w = build_potential(model, base)?;
        if w.key() != record.potential {
            return Err(config_err(format!(
                "[model] potential {:?} disagrees with the stored solution's {:?}",
                w.key(),
                record.potential
            )));
        }
        if let Some(fk) = model.family {
            if convention_of(fk) != record.solution.convention {
                return Err(config_err(format!(
                    "[model] family {fk} disagrees with the stored solution's convention"
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------
// diagnostics

fn cmd_diagnostics(cfg: &RunConfig, base: &Path, out_dir: &Path) -> RunResult<()> {
    let dg: &DiagnosticsConfig = cfg
        .diagnostics
        .as_ref()
        .ok_or_else(|| config_err("the diagnostics command needs a [diagnostics] block"))?;
    if dg.radii.is_none() && dg.gn.is_none() {
        return Err(config_err(
            "the [diagnostics] block needs radii (plateau scan) and/or a [diagnostics.gn] table",
        ));
    }

    if let Some(radii) = &dg.radii {
        if radii.is_empty() {
            return Err(config_err("radii must not be empty"));
        }
        for &r in radii {
            check_positive("plateau radius", r)?;
        }
        let s0 = dg.s0.unwrap_or(1.0);
        if !(s0.is_finite() && s0 != 0.0) {
            return Err(config_err(format!(
                "plateau height s0 must be finite and nonzero, got {s0}"
            )));
        }
        let grid = require_grid(cfg)?;
        let model = require_model(cfg)?;
        let w = build_potential(model, base)?;
        let report = hylomorphy_scan(&w, model.s, s0, radii, &grid)
            .map_err(|e| RunError::Numerical(format!("plateau scan failed: {e}")))?;
        emit(
            out_dir,
            "hylomorphy.txt",
            &hylo_core::hylomorphy_to_text(&report),
        )?;
        let verdict = if report.verdict {
            "energy-per-charge dips below the free-field floor"
        } else {
            "no dip below the free-field floor detected"
        };
        println!("scan verdict: {verdict}");
    }

    if let Some(gn) = &dg.gn {
        if gn.p.is_empty() || gn.s.is_empty() {
            return Err(config_err("the gn table needs nonempty p and s lists"));
        }
        for &p in &gn.p {
            if !p.is_finite() {
                return Err(config_err(format!("gn exponent p must be finite, got {p}")));
            }
        }
        for &s in &gn.s {
            if !s.is_finite() {
                return Err(config_err(format!("gn order s must be finite, got {s}")));
            }
        }
        let mut rows: Vec<(f64, f64, GnExponents)> = Vec::with_capacity(gn.p.len() * gn.s.len());
        for &p in &gn.p {
            for &s in &gn.s {
                rows.push((p, s, gn_exponents(p, s)));
            }
        }
        emit(out_dir, "gn_table.txt", &hylo_core::gn_table_to_text(&rows))?;
    }

    Ok(())
}
