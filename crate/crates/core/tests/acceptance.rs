//! End-to-end acceptance suite. Each test prints one `PASS` or `FAIL` line
//! to stderr, bypassing the harness capture, and the tests are serialized so
//! the runtime budgets are measured on an otherwise idle process.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use cbf::cli::manufactured::{bump_source, make_manufactured, ManufacturedCase, BUMP_AMPLITUDE};
use cbf::cli::{parse_config, run};
use cbf::diagnostics::{energy_report, stability_sweep, DataBundle, Quadrature, StabilityConfig};
use cbf::direct::{solve_direct, Params, SolverOptions, SourceProfile, TimeProfile};
use cbf::fields::{damping, divergence, gradient, project, weighted_norm_sq, FieldRng, Grid, VectorField};
use cbf::inverse::{
    apply_b, check_admissibility, check_admissibility_values, estimate_lambda1, fixed_point_solve, synthetic_twin,
    ConditionKind, FixedPointOptions, ForwardModel,
};

static SERIAL: Mutex<()> = Mutex::new(());

fn report(id: u32, title: &str, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("{verdict} [{id}] {title} ({:.1} s): {detail}\n", elapsed.as_secs_f64());
    let mut err = std::io::stderr().lock();
    err.write_all(line.as_bytes()).unwrap();
    err.flush().unwrap();
}

/// Run `body` under the global lock, print its verdict, then assert it.
fn criterion(id: u32, title: &str, budget: Duration, body: impl FnOnce() -> (bool, String)) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let (ok, detail) = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let detail = if in_time {
        detail
    } else {
        format!("{detail}; over the {:.0} s budget", budget.as_secs_f64())
    };
    report(id, title, ok && in_time, elapsed, &detail);
    assert!(ok && in_time, "criterion {id}: {detail}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

#[test]
fn c01_projection_suite() {
    criterion(1, "projection suite", secs(10), || {
        let g = Grid::square(64).unwrap();
        let (mut div, mut idem, mut grad) = (0.0_f64, 0.0_f64, 0.0_f64);
        for seed in 0..100 {
            let mut rng = FieldRng::new(seed);
            let w = rng.vector(g);
            let pw = project(&w).unwrap();
            div = div.max(divergence(&pw).max_abs());
            idem = idem.max((&project(&pw).unwrap() - &pw).l2() / w.l2());
            let mut s = rng.scalar(g);
            s.remove_mean();
            let gs = gradient(&s);
            grad = grad.max(project(&gs).unwrap().l2() / gs.l2());
        }
        let ok = div <= 1e-10 && idem <= 1e-12 && grad <= 1e-9;
        (ok, format!("max |div Pw| = {div:.2e}, idempotence {idem:.2e}, gradient leak {grad:.2e}"))
    })
}

#[test]
fn c02_damping_monotonicity() {
    criterion(2, "damping monotonicity", secs(10), || {
        let g = Grid::square(16).unwrap();
        let mut rng = FieldRng::new(2024);
        let mut worst = f64::INFINITY;
        for k in 0..1000 {
            let r = [1.0, 2.0, 3.0, 4.5][k % 4];
            let beta = rng.uniform(0.05, 5.0);
            let alpha = rng.uniform(0.0, 2.0);
            let a = rng.no_slip(g).scaled(rng.uniform(0.1, 3.0));
            let b = rng.no_slip(g).scaled(rng.uniform(0.1, 3.0));
            let d = &a - &b;
            let lhs = (&damping(&a, r, beta, alpha).unwrap() - &damping(&b, r, beta, alpha).unwrap()).inner(&d);
            let rhs = 0.5 * beta * (weighted_norm_sq(&a, &d, r) + weighted_norm_sq(&b, &d, r));
            worst = worst.min(lhs - rhs);
        }
        (worst >= -1e-10, format!("worst slack over 1000 pairs {worst:.3e}"))
    })
}

fn vortex_run(n: usize, t_final: f64, dt: f64) -> (VectorField, VectorField) {
    let params = Params::new(0.02, 0.1, 1.0, 3.0, t_final, dt).unwrap();
    let m = make_manufactured(ManufacturedCase::DecayingVortex, Grid::square(n).unwrap(), &params).unwrap();
    let traj = solve_direct(&m.u0, &params, &m.source, 1_000_000, &SolverOptions::default()).unwrap();
    (traj.u_final().clone(), m.u_exact(t_final))
}

fn orders(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn c03_manufactured_convergence() {
    criterion(3, "manufactured convergence", secs(300), || {
        let spatial: Vec<f64> = [32, 64, 128]
            .iter()
            .map(|&n| {
                let (u, exact) = vortex_run(n, 0.1, 5e-4);
                (&u - &exact).l2()
            })
            .collect();
        // On a fixed grid the spatial error cancels from successive
        // differences, leaving the temporal one.
        let states: Vec<VectorField> = [0.004, 0.002, 0.001, 0.0005]
            .iter()
            .map(|&dt| vortex_run(128, 0.5, dt).0)
            .collect();
        let temporal: Vec<f64> = states.windows(2).map(|w| (&w[0] - &w[1]).l2()).collect();
        let (ps, pt) = (orders(&spatial), orders(&temporal));
        let ok = ps.iter().all(|p| (1.8..=2.2).contains(p)) && pt.iter().all(|p| (0.9..=1.1).contains(p));
        (ok, format!("spatial orders {ps:.3?}, temporal orders {pt:.3?}"))
    })
}

#[test]
fn c04_energy_inequality() {
    criterion(4, "energy inequality", secs(120), || {
        let g = Grid::square(32).unwrap();
        let mut ok = true;
        let mut worst = f64::INFINITY;
        for r in [1.0, 3.0, 4.5] {
            let params = Params::new(0.5, 1.0, 1.0, r, 0.5, 0.005).unwrap();
            let u0 = make_manufactured(ManufacturedCase::DecayingVortex, g, &params).unwrap().u0;
            for f in [VectorField::zeros(g), bump_source(&g, BUMP_AMPLITUDE).unwrap()] {
                let src = SourceProfile::new(f, TimeProfile::affine(1.0, 1.0)).unwrap();
                let traj = solve_direct(&u0, &params, &src, 1, &SolverOptions::default()).unwrap();
                let rep = energy_report(&traj, &src, Quadrature::Implicit);
                let e1 = &rep.ledger[0];
                let tol = e1.tol.unwrap();
                ok &= e1.pass && rep.energy.slack.iter().all(|s| *s >= -tol);
                worst = worst.min(rep.energy.slack.iter().copied().fold(f64::INFINITY, f64::min));
            }
        }
        (ok, format!("worst per-step slack {worst:.3e} over six runs"))
    })
}

fn separable_defect(n: usize, dt: f64) -> f64 {
    let params = Params::new(0.5, 1.0, 1.0, 3.0, 0.5, dt).unwrap();
    let m = make_manufactured(ManufacturedCase::Separable, Grid::square(n).unwrap(), &params).unwrap();
    let mut model = ForwardModel::new(m.u0.clone(), params, m.g.clone());
    model.aux = Some(m.aux.clone());
    let pb = project(&apply_b(&m.f_true, &m.exact_final, &model).unwrap()).unwrap();
    (&pb - &m.f_true).l2() / m.f_true.l2()
}

#[test]
fn c05_fixed_point_identity() {
    criterion(5, "fixed-point identity", secs(300), || {
        let coarse = separable_defect(32, 0.002);
        let fine = separable_defect(64, 0.001);
        let ratio = coarse / fine;
        (ratio >= 3.0, format!("defect {coarse:.4e} -> {fine:.4e}, ratio {ratio:.3}"))
    })
}

fn twin_params() -> Params {
    Params::new(0.5, 5.0, 1.0, 3.0, 0.5, 0.005).unwrap()
}

fn tight() -> FixedPointOptions {
    FixedPointOptions {
        tol: 1e-10,
        ..FixedPointOptions::default()
    }
}

#[test]
fn c06_twin_reconstruction() {
    criterion(6, "twin reconstruction", secs(900), || {
        let coarse = Grid::square(64).unwrap();
        let params = twin_params();
        let twin = synthetic_twin(
            coarse,
            2,
            &params,
            TimeProfile::affine(1.0, 1.0),
            |g| bump_source(g, BUMP_AMPLITUDE),
            &SolverOptions::default(),
        )
        .unwrap();
        let lambda1 = estimate_lambda1(coarse).unwrap().lambda1;
        let verdict = check_admissibility(&params, &twin.data.phi, lambda1);
        if !verdict.pass {
            return (false, "parameters fail the admissibility check".into());
        }
        let rep = fixed_point_solve(&twin.data, &twin.model, &tight(), None, true).unwrap();
        let err = (&rep.f_hat - &twin.f_true).l2() / twin.f_true.l2();
        let head = &rep.residual_history[..rep.residual_history.len().min(6)];
        let monotone = head.windows(2).all(|w| w[1] <= w[0]);
        let last = *rep.residual_history.last().unwrap();
        let ok = rep.converged && err <= 0.05 && monotone && rep.fixed_point_defect <= 10.0 * last;
        (
            ok,
            format!(
                "relative error {err:.4}, {} iterations, defect {:.2e}, final residual {last:.2e}",
                rep.iterations, rep.fixed_point_defect
            ),
        )
    })
}

#[test]
fn c07_admissibility_table() {
    use ConditionKind::*;
    // (dim, mu, beta, r, lambda1, phi_l4, expected left sides, verdict)
    type Row = (usize, f64, f64, f64, f64, f64, &'static [(ConditionKind, f64)], bool);
    const TABLE: &[Row] = &[
        (2, 0.5, 1.0, 3.0, 32.0, 0.8, &[(PlanarDataBound, 0.4)], true),
        (2, 0.4, 1.0, 3.0, 32.0, 0.8, &[(PlanarDataBound, 0.4)], false),
        (2, 0.3, 1.0, 1.0, 32.0, 0.8, &[(PlanarDataBound, 0.4)], false),
        (2, 1e-3, 1.0, 4.5, 52.0, 0.0, &[(PlanarDataBound, 0.0)], true),
        (3, 0.3, 2.0, 3.0, 52.0, 0.0, &[(Critical, 0.25)], true),
        (3, 0.25, 2.0, 3.0, 52.0, 0.0, &[(Critical, 0.25)], false),
        (3, 0.9, 0.5, 3.0, 52.0, 0.0, &[(Critical, 1.0)], false),
        (3, 0.3, 1.0, 4.0, 32.0, 0.0, &[(FastGrowth, 0.1714677640603567), (Alternative, 0.5)], true),
        (3, 0.2, 1.0, 4.0, 32.0, 0.0, &[(FastGrowth, 0.5787037037037035), (Alternative, 0.5)], false),
        (3, 0.6, 1.0, 4.0, 32.0, 0.0, &[(FastGrowth, 0.021433470507544586), (Alternative, 0.5)], true),
        (3, 0.55, 10.0, 4.0, 0.05, 0.0, &[(FastGrowth, 0.17808943428778137), (Alternative, 2.23606797749979)], true),
        (3, 0.12, 10.0, 5.0, 0.05, 0.0, &[(FastGrowth, 34.72222222222222), (Alternative, 2.23606797749979)], false),
        (3, 0.006, 100.0, 4.0, 1e4, 0.0, &[(FastGrowth, 0.006858710562414268), (Alternative, 0.005)], true),
        (3, 1.0, 1.0, 2.0, 52.0, 0.0, &[], false),
    ];
    criterion(7, "admissibility table", secs(1), || {
        let mut mismatches = Vec::new();
        for (i, &(dim, mu, beta, r, lambda1, phi_l4, expected, verdict)) in TABLE.iter().enumerate() {
            let v = check_admissibility_values(dim, mu, beta, r, lambda1, phi_l4);
            let applicable: Vec<_> = v.conditions.iter().filter(|c| c.applicable).collect();
            let lhs_ok = applicable.len() == expected.len()
                && expected.iter().all(|(kind, lhs)| {
                    applicable
                        .iter()
                        .any(|c| c.kind == *kind && (c.lhs - lhs).abs() <= 4.0 * f64::EPSILON * lhs.abs())
                });
            let pass_ok = applicable.iter().all(|c| c.pass == (c.lhs < mu));
            if v.pass != verdict || !lhs_ok || !pass_ok {
                mismatches.push(i);
            }
        }
        (
            mismatches.is_empty(),
            format!("{} tuples, mismatching rows {mismatches:?}", TABLE.len()),
        )
    })
}

#[test]
fn c08_lambda1_estimator() {
    criterion(8, "lambda1 estimator", secs(120), || {
        let at = |n| estimate_lambda1(Grid::square(n).unwrap()).unwrap().lambda1;
        let (l64, l128, l256) = (at(64), at(128), at(256));
        let reference = l256 + (l256 - l128) / 3.0;
        let lower = 2.0 * std::f64::consts::PI.powi(2);
        let rel = (reference - l64) / reference;
        let ok = lower < l64 && l64 < reference && rel <= 0.02;
        (ok, format!("lambda1(64) = {l64:.6}, reference {reference:.6}, gap {:.3}%", 100.0 * rel))
    })
}

#[test]
fn c09_stability_sweep() {
    criterion(9, "stability sweep", secs(2700), || {
        let coarse = Grid::square(64).unwrap();
        let params = twin_params();
        let opts = SolverOptions::default();
        let bundle = |d: f64| {
            let g = TimeProfile::affine(1.0 + d, 1.0 + d);
            let tw = synthetic_twin(coarse, 2, &params, g.clone(), |gr| bump_source(gr, BUMP_AMPLITUDE), &opts).unwrap();
            DataBundle {
                u0: VectorField::zeros(coarse),
                data: tw.data,
                g,
            }
        };
        let base = bundle(0.0);
        let perturbed: Vec<_> = [1e-2, 5e-3, 2.5e-3].iter().map(|&d| (d, bundle(d))).collect();
        let cfg = StabilityConfig {
            fixed_point: tight(),
            solver: opts,
            lambda1: estimate_lambda1(coarse).unwrap().lambda1,
        };
        let sweep = stability_sweep(&base, &perturbed, &params, &cfg).unwrap();
        let cs: Vec<Option<f64>> = sweep.scaling_table.iter().map(|r| r.implied_c).collect();
        let finite = cs.iter().all(|c| c.is_some_and(f64::is_finite));
        let complete = sweep.reports.iter().all(|r| !r.incomplete);
        let ok = finite && complete && sweep.spread.is_some_and(|s| s <= 2.0);
        (ok, format!("implied constants {cs:.6?}, spread {:?}", sweep.spread))
    })
}

const DETERMINISM_CONFIG: &str = r#"
seed = 11
snapshot_stride = 4

[grid]
dim = 2
n = 16

[params]
mu = 0.5
alpha = 5.0
beta = 1.0
r = 3.0
t_final = 0.1
dt = 0.01

[problem]
case = "bump"
"#;

fn json_reports(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn c10_determinism() {
    criterion(10, "determinism", secs(60), || {
        let dir = tempfile::tempdir().unwrap();
        let mut compared = 0;
        let mut diffs = Vec::new();
        for mode in ["direct", "invert", "verify-energy"] {
            let mut cfg = parse_config(DETERMINISM_CONFIG).unwrap();
            cfg.mode = Some(mode.parse().unwrap());
            let (a, b) = (dir.path().join(format!("{mode}-a")), dir.path().join(format!("{mode}-b")));
            if run(&cfg, &a) != 0 || run(&cfg, &b) != 0 {
                return (false, format!("{mode} run did not pass"));
            }
            let (ra, rb) = (json_reports(&a), json_reports(&b));
            if ra.keys().ne(rb.keys()) {
                diffs.push(format!("{mode}: report sets differ"));
            }
            for (name, bytes) in &ra {
                compared += 1;
                if rb.get(name) != Some(bytes) {
                    diffs.push(format!("{mode}/{name}"));
                }
            }
        }
        (
            diffs.is_empty() && compared >= 3,
            format!("{compared} JSON reports compared, differing {diffs:?}"),
        )
    })
}
