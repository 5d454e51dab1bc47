use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::{DataKind, InitialKind, Mode, ProblemCase, RunConfig};
use super::manufactured::{bump_source, make_manufactured, Manufactured};
use crate::diagnostics::{
    energy_report, refinement_ratios, refinement_stable, stability_sweep, tables, DataBundle, EnergyReport,
    StabilityConfig, StabilitySweep,
};
use crate::direct::{solve_direct, write_trajectory, Params, SourceProfile, TimeProfile};
use crate::error::{CbfError, Result, ResultExt};
use crate::fields::io::{read_vector, write_vector};
use crate::fields::transfer::restrict_vector;
use crate::fields::{FieldRng, Grid, VectorField};
use crate::inverse::{
    check_admissibility, estimate_lambda1, fixed_point_solve_observed, synthetic_twin, AdmissibilityVerdict,
    ForwardModel, OverdeterminationData,
};

/// Exit status for a run whose checks all hold.
pub const EXIT_PASS: i32 = 0;
/// Exit status for an error before the checks could be evaluated.
pub const EXIT_ERROR: i32 = 1;
/// Exit status for a completed run with a failing check.
pub const EXIT_CHECK_FAILED: i32 = 2;

/// Divergence bound asserted on every stored snapshot.
pub const DIVERGENCE_CHECK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Checks and artifacts of a finished run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub checks: Vec<Check>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().all(|c| c.pass) {
            EXIT_PASS
        } else {
            EXIT_CHECK_FAILED
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    mode: &'a str,
    config_sha256: &'a str,
    seed: u64,
    artifacts: &'a [String],
    complete: bool,
    exit_code: i32,
    error: Option<String>,
    started_unix_s: f64,
    finished_unix_s: f64,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Collects artifacts as they are written so a failed run still lists them.
struct Sink {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl Sink {
    fn name_of(&self, path: &Path) -> String {
        path.strip_prefix(&self.dir).unwrap_or(path).to_string_lossy().into_owned()
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }

    fn field(&mut self, name: &str, u: &VectorField) -> Result<()> {
        write_vector(&self.dir.join(name), u)?;
        self.artifacts.push(name.into());
        Ok(())
    }

    fn schema(&mut self) -> Result<()> {
        let schema: serde_json::Map<String, serde_json::Value> = tables::SCHEMA
            .iter()
            .map(|(file, cols)| {
                let cols = cols
                    .iter()
                    .map(|(c, d)| serde_json::json!({ "name": c, "description": d }))
                    .collect();
                (file.to_string(), serde_json::Value::Array(cols))
            })
            .collect();
        self.json("csv_schema.json", &schema)
    }
}

/// Run `cfg` (mode already resolved), write the manifest and return the
/// process exit status.
pub fn run(cfg: &RunConfig, out: &Path) -> i32 {
    let started = unix_now();
    let mode = cfg.mode.map(Mode::name).unwrap_or("unresolved");
    let mut sink = Sink {
        dir: out.to_path_buf(),
        artifacts: Vec::new(),
    };
    let result = fs::create_dir_all(out)
        .map_err(|e| CbfError::Io(e).context(format!("output directory {}", out.display())))
        .and_then(|_| execute(cfg, &mut sink));
    let (exit_code, error, checks) = match result {
        Ok(checks) => {
            let outcome = RunOutcome {
                checks,
                artifacts: sink.artifacts.clone(),
            };
            (outcome.exit_code(), None, outcome.checks)
        }
        Err(e) => (EXIT_ERROR, Some(e.to_string()), Vec::new()),
    };
    for c in &checks {
        eprintln!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }
    let manifest = Manifest {
        mode,
        config_sha256: &cfg.text_sha256,
        seed: cfg.seed,
        artifacts: &sink.artifacts,
        complete: error.is_none(),
        exit_code,
        error,
        started_unix_s: started,
        finished_unix_s: unix_now(),
    };
    let written = serde_json::to_string_pretty(&manifest)
        .map_err(CbfError::from)
        .and_then(|body| fs::write(out.join("manifest.json"), body + "\n").map_err(CbfError::from));
    if let Err(e) = written {
        eprintln!("error: cannot write the manifest: {e}");
        return EXIT_ERROR;
    }
    exit_code
}

/// Dispatch on the mode; returns the evaluated checks.
fn execute(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<Check>> {
    match cfg.mode {
        Some(Mode::Direct) => direct_mode(cfg, sink),
        Some(Mode::Invert) => invert_mode(cfg, sink),
        Some(Mode::VerifyEnergy) => energy_mode(cfg, sink),
        Some(Mode::Stability) => stability_mode(cfg, sink),
        Some(Mode::Admissibility) => admissibility_mode(cfg, sink),
        None => Err(CbfError::Config("mode: not given".into())),
    }
}

/// Initial state, source and optional closed form of a configured run.
pub struct Problem {
    pub grid: Grid,
    pub params: Params,
    pub u0: VectorField,
    pub source: SourceProfile,
    pub manufactured: Option<Manufactured>,
}

fn unit_scaled(mut u: VectorField, norm: f64) -> VectorField {
    let n = u.l2();
    if n > 0.0 {
        u.scale(norm / n);
    }
    u
}

/// Seeded random divergence-free field with `L^2` norm `amp`.
pub fn random_source(grid: Grid, seed: u64, amp: f64) -> Result<VectorField> {
    Ok(unit_scaled(FieldRng::new(seed).solenoidal(grid)?, amp))
}

/// Spatial source of a non-manufactured case on `grid`; random sources are
/// drawn on `draw_grid` and restricted.
fn plain_source(cfg: &RunConfig, grid: Grid, draw_grid: Grid) -> Result<VectorField> {
    let p = &cfg.problem;
    match p.case {
        ProblemCase::Bump => bump_source(&grid, p.amplitude),
        ProblemCase::Random => {
            let fine = random_source(draw_grid, cfg.seed, p.amplitude)?;
            if grid == draw_grid {
                Ok(fine)
            } else {
                restrict_vector(&fine, grid)
            }
        }
        _ => Ok(VectorField::zeros(grid)),
    }
}

fn read_on(path: &Path, grid: Grid, what: &str) -> Result<VectorField> {
    let u = read_vector(path).with_context(|| format!("{what} file {}", path.display()))?;
    grid.check_same(u.grid())?;
    Ok(u)
}

pub fn build_problem(cfg: &RunConfig) -> Result<Problem> {
    let grid = cfg.grid()?;
    let params = cfg.params;
    let p = &cfg.problem;
    let manufactured = match p.case.manufactured() {
        Some(case) => Some(make_manufactured(case, grid, &params)?),
        None => None,
    };
    let (mut u0, mut source) = match &manufactured {
        Some(m) => (m.u0.clone(), m.source.clone()),
        None => {
            let g = TimeProfile::affine(p.g_offset, p.g_rate);
            let f = plain_source(cfg, grid, grid)?;
            let u0 = match p.initial {
                InitialKind::Random => {
                    unit_scaled(FieldRng::new(cfg.seed.wrapping_add(1)).solenoidal(grid)?, p.initial_amplitude)
                }
                InitialKind::Case | InitialKind::Zero => VectorField::zeros(grid),
            };
            (u0, SourceProfile::new(f, g)?)
        }
    };
    if let Some(path) = &cfg.paths.initial {
        u0 = read_on(path, grid, "initial velocity")?;
    }
    if let Some(path) = &cfg.paths.source {
        let f = read_on(path, grid, "source")?;
        let aux = source.aux.clone();
        source = SourceProfile::new(f, source.g.clone())?;
        if let Some(aux) = aux {
            source = source.with_aux(aux);
        }
    }
    Ok(Problem {
        grid,
        params,
        u0,
        source,
        manufactured,
    })
}

#[derive(Serialize)]
struct ExactError {
    u_l2: f64,
    u_relative: f64,
}

#[derive(Serialize)]
struct DirectReport<'a> {
    config: &'a RunConfig,
    source_label: String,
    dt: f64,
    steps: usize,
    max_divergence: f64,
    max_krylov_iterations: usize,
    final_h_sq: f64,
    ut_discrepancy: Option<f64>,
    ut_warning: bool,
    exact_error: Option<ExactError>,
    checks: &'a [Check],
}

fn direct_mode(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<Check>> {
    let prob = build_problem(cfg)?;
    let traj = solve_direct(&prob.u0, &prob.params, &prob.source, cfg.snapshot_stride, &cfg.solver)?;
    let written = write_trajectory(&traj, &sink.dir, "trajectory")?;
    for p in &written {
        let name = sink.name_of(p);
        sink.artifacts.push(name);
    }
    let report = energy_report(&traj, &prob.source, cfg.energy.quadrature);
    sink.text("energy.csv", &tables::energy_csv(&report)?)?;
    sink.schema()?;

    let exact_error = prob.manufactured.as_ref().map(|m| {
        let exact = m.u_exact(prob.params.t_final);
        let e = (traj.u_final() - &exact).l2();
        ExactError {
            u_l2: e,
            u_relative: e / exact.l2().max(f64::MIN_POSITIVE),
        }
    });
    let checks = vec![Check::new(
        "divergence",
        traj.max_divergence <= DIVERGENCE_CHECK,
        format!("max |div u| = {:.3e}", traj.max_divergence),
    )];
    sink.json(
        "direct_report.json",
        &DirectReport {
            config: cfg,
            source_label: prob.source.g.label(),
            dt: traj.dt,
            steps: traj.steps,
            max_divergence: traj.max_divergence,
            max_krylov_iterations: traj.max_krylov_iterations,
            final_h_sq: traj.energy_samples.last().map(|e| e.h_sq).unwrap_or(0.0),
            ut_discrepancy: traj.ut_discrepancy,
            ut_warning: traj.ut_warning,
            exact_error,
            checks: &checks,
        },
    )?;
    Ok(checks)
}

#[derive(Serialize)]
struct EnergyRun {
    dt: f64,
    report: EnergyReport,
}

#[derive(Serialize)]
struct EnergyModeReport<'a> {
    config: &'a RunConfig,
    runs: Vec<EnergyRun>,
    /// Implied constants per estimate along the `dt` halvings.
    constants: std::collections::BTreeMap<String, Vec<f64>>,
    ratios: std::collections::BTreeMap<String, Vec<f64>>,
    checks: &'a [Check],
}

fn energy_mode(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<Check>> {
    let prob = build_problem(cfg)?;
    let mut runs = Vec::new();
    let mut checks = Vec::new();
    for level in 0..cfg.energy.refinements {
        let params = prob.params.with_dt(prob.params.dt / f64::powi(2.0, level as i32));
        let traj = solve_direct(&prob.u0, &params, &prob.source, cfg.snapshot_stride, &cfg.solver)
            .with_context(|| format!("energy run at dt = {}", params.dt))?;
        let report = energy_report(&traj, &prob.source, cfg.energy.quadrature);
        let e1 = &report.ledger[0];
        checks.push(Check::new(
            &format!("energy_bound[dt={}]", traj.dt),
            e1.pass,
            format!("worst slack {:.3e}, tol {:.1e}", e1.slack.unwrap_or(f64::NAN), e1.tol.unwrap_or(f64::NAN)),
        ));
        if level == 0 {
            sink.text("energy.csv", &tables::energy_csv(&report)?)?;
        }
        runs.push(EnergyRun { dt: traj.dt, report });
    }
    let mut constants = std::collections::BTreeMap::new();
    for run in &runs {
        for (name, c) in &run.report.implied_constants {
            constants.entry(name.clone()).or_insert_with(Vec::new).push(*c);
        }
    }
    let mut ratios = std::collections::BTreeMap::new();
    for (name, cs) in &constants {
        checks.push(Check::new(
            &format!("{name}_refinement"),
            refinement_stable(cs),
            format!("implied constants {cs:?}"),
        ));
        ratios.insert(name.clone(), refinement_ratios(cs));
    }
    sink.schema()?;
    sink.json(
        "energy_report.json",
        &EnergyModeReport {
            config: cfg,
            runs,
            constants,
            ratios,
            checks: &checks,
        },
    )?;
    Ok(checks)
}

fn lambda1_for(cfg: &RunConfig, grid: Grid) -> Result<f64> {
    match cfg.inverse.lambda1 {
        Some(l) => Ok(l),
        None => Ok(estimate_lambda1(grid)?.lambda1),
    }
}

/// Data, forward model and truth for an inversion on the configured grid.
struct InverseSetup {
    data: OverdeterminationData,
    model: ForwardModel,
    f_true: VectorField,
}

fn inverse_setup(cfg: &RunConfig, g: TimeProfile) -> Result<InverseSetup> {
    let grid = cfg.grid()?;
    let params = cfg.params;
    match cfg.inverse.data {
        DataKind::Exact => {
            let case = cfg.problem.case.manufactured().ok_or_else(|| {
                CbfError::Config("inverse.data: exact data need a manufactured case".into())
            })?;
            let m = make_manufactured(case, grid, &params)?;
            let mut model = ForwardModel::new(m.u0.clone(), params, m.g.clone());
            model.aux = Some(m.aux.clone());
            model.options = cfg.solver;
            Ok(InverseSetup {
                data: m.exact_final.clone(),
                model,
                f_true: m.f_true.clone(),
            })
        }
        DataKind::Twin => {
            let factor = cfg.inverse.refinement;
            let fine = grid.refined(factor)?;
            let truth = |gr: &Grid| -> Result<VectorField> {
                match cfg.problem.case.manufactured() {
                    Some(case) => Ok(make_manufactured(case, *gr, &params.with_dt(params.dt / factor as f64))?.f_true),
                    None => plain_source(cfg, *gr, fine),
                }
            };
            let tw = synthetic_twin(grid, factor, &params, g, truth, &cfg.solver)?;
            Ok(InverseSetup {
                data: tw.data,
                model: tw.model,
                f_true: tw.f_true,
            })
        }
    }
}

fn base_g(cfg: &RunConfig) -> Result<TimeProfile> {
    match cfg.problem.case.manufactured() {
        Some(case) => Ok(make_manufactured(case, cfg.grid()?, &cfg.params)?.g),
        None => Ok(TimeProfile::affine(cfg.problem.g_offset, cfg.problem.g_rate)),
    }
}

#[derive(Serialize)]
struct InvertReport<'a> {
    config: &'a RunConfig,
    lambda1: f64,
    admissibility: AdmissibilityVerdict,
    iterations: usize,
    converged: bool,
    residual_history: Vec<f64>,
    ball_norms: Vec<f64>,
    left_ball: Vec<usize>,
    fixed_point_defect: f64,
    raw_defect: f64,
    ball_norm: f64,
    admissibility_overridden: bool,
    rescaled: bool,
    pressure_data_discrepancy: Option<f64>,
    failure: Option<String>,
    relative_error: f64,
    error_history: Vec<f64>,
    checks: &'a [Check],
}

fn invert_mode(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<Check>> {
    let setup = inverse_setup(cfg, base_g(cfg)?)?;
    let lambda1 = lambda1_for(cfg, cfg.grid()?)?;
    let verdict = check_admissibility(&cfg.params, &setup.data.phi, lambda1);
    let mut checks = vec![Check::new(
        "admissibility",
        verdict.pass || cfg.inverse.override_admissibility,
        match &verdict.note {
            Some(n) => n.clone(),
            None => format!("verdict {}", if verdict.pass { "pass" } else { "fail" }),
        },
    )];
    if !verdict.pass && !cfg.inverse.override_admissibility {
        sink.json("admissibility.json", &verdict)?;
        return Ok(checks);
    }
    let truth_norm = setup.f_true.l2().max(f64::MIN_POSITIVE);
    let mut errors = Vec::new();
    let rep = fixed_point_solve_observed(
        &setup.data,
        &setup.model,
        &cfg.inverse.fixed_point(),
        None,
        verdict.pass,
        |_, f| errors.push((f - &setup.f_true).l2() / truth_norm),
    )?;
    let relative_error = (&rep.f_hat - &setup.f_true).l2() / truth_norm;
    checks.push(Check::new(
        "converged",
        rep.converged,
        format!("{} iterations, last step {:.3e}", rep.iterations, rep.residual_history.last().copied().unwrap_or(0.0)),
    ));
    sink.field("f_hat.cbf", &rep.f_hat)?;
    sink.field("f_true.cbf", &setup.f_true)?;
    sink.text(
        "reconstruction.csv",
        &tables::reconstruction_csv(&rep.residual_history, &rep.ball_norms, errors.get(1..))?,
    )?;
    sink.schema()?;
    sink.json(
        "invert_report.json",
        &InvertReport {
            config: cfg,
            lambda1,
            admissibility: verdict,
            iterations: rep.iterations,
            converged: rep.converged,
            residual_history: rep.residual_history.clone(),
            ball_norms: rep.ball_norms.clone(),
            left_ball: rep.left_ball.clone(),
            fixed_point_defect: rep.fixed_point_defect,
            raw_defect: rep.raw_defect,
            ball_norm: rep.ball_norm,
            admissibility_overridden: rep.admissibility_overridden,
            rescaled: rep.rescaled,
            pressure_data_discrepancy: rep.pressure_data_discrepancy,
            failure: rep.failure.clone(),
            relative_error,
            error_history: errors,
            checks: &checks,
        },
    )?;
    Ok(checks)
}

#[derive(Serialize)]
struct StabilityModeReport<'a> {
    config: &'a RunConfig,
    lambda1: f64,
    sweep: StabilitySweep,
    checks: &'a [Check],
}

fn stability_mode(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<Check>> {
    let g = base_g(cfg)?;
    let bundle = |g: TimeProfile| -> Result<DataBundle> {
        let s = inverse_setup(cfg, g.clone())?;
        Ok(DataBundle {
            u0: s.model.u0,
            data: s.data,
            g,
        })
    };
    let base = bundle(g.clone())?;
    let mut perturbed = Vec::new();
    for &d in &cfg.stability.deltas {
        perturbed.push((d, bundle(g.scaled(1.0 + d))?));
    }
    let lambda1 = lambda1_for(cfg, cfg.grid()?)?;
    let scfg = StabilityConfig {
        fixed_point: cfg.inverse.fixed_point(),
        solver: cfg.solver,
        lambda1,
    };
    let sweep = stability_sweep(&base, &perturbed, &cfg.params, &scfg)?;
    let finite = sweep.scaling_table.iter().all(|r| r.implied_c.is_some_and(f64::is_finite));
    let complete = sweep.reports.iter().all(|r| !r.incomplete);
    let checks = vec![
        Check::new("implied_constants_finite", finite, format!("{:?}", sweep.scaling_table.iter().map(|r| r.implied_c).collect::<Vec<_>>())),
        Check::new("reconstructions_converged", complete, ""),
        Check::new(
            "implied_constant_spread",
            sweep.spread.is_some_and(|s| s <= cfg.stability.max_spread),
            format!("max/min = {:?}, limit {}", sweep.spread, cfg.stability.max_spread),
        ),
    ];
    sink.text("scaling.csv", &tables::scaling_csv(&sweep.scaling_table)?)?;
    sink.schema()?;
    sink.json(
        "stability_report.json",
        &StabilityModeReport {
            config: cfg,
            lambda1,
            sweep,
            checks: &checks,
        },
    )?;
    Ok(checks)
}

#[derive(Serialize)]
struct AdmissibilityReport<'a> {
    config: &'a RunConfig,
    /// Where the data velocity came from.
    phi: &'static str,
    verdict: AdmissibilityVerdict,
    checks: &'a [Check],
}

fn admissibility_mode(cfg: &RunConfig, sink: &mut Sink) -> Result<Vec<Check>> {
    let grid = cfg.grid()?;
    let (phi, origin) = match (&cfg.paths.initial, cfg.problem.case.manufactured()) {
        (Some(path), _) => (read_on(path, grid, "data velocity")?, "file"),
        (None, Some(case)) => (make_manufactured(case, grid, &cfg.params)?.exact_final.phi, "manufactured"),
        (None, None) => (VectorField::zeros(grid), "zero"),
    };
    let lambda1 = lambda1_for(cfg, grid)?;
    let verdict = check_admissibility(&cfg.params, &phi, lambda1);
    let checks = vec![Check::new(
        "admissibility",
        verdict.pass,
        verdict.note.clone().unwrap_or_else(|| format!("lambda1 = {lambda1:.6}")),
    )];
    sink.json(
        "admissibility_report.json",
        &AdmissibilityReport {
            config: cfg,
            phi: origin,
            verdict,
            checks: &checks,
        },
    )?;
    Ok(checks)
}
