use cbf::cli::manufactured::{bump_source, BUMP_AMPLITUDE};
use cbf::direct::{Params, SolverOptions, TimeProfile};
use cbf::fields::{FieldRng, Grid, ScalarField, VectorField};
use cbf::inverse::{
    apply_b_stationary, check_admissibility, estimate_lambda1, fixed_point_solve, synthetic_twin, FixedPointOptions,
    ForwardModel, OverdeterminationData,
};

const TWO_PI_SQ: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;

fn grid(n: usize) -> Grid {
    Grid::square(n).unwrap()
}

#[test]
fn zero_data_reconstruct_the_zero_source() {
    let g = grid(16);
    let params = Params::new(0.5, 1.0, 1.0, 3.0, 0.1, 0.01).unwrap();
    let data = OverdeterminationData::new(
        VectorField::zeros(g),
        VectorField::zeros(g),
        ScalarField::constant(g, 1.1),
        1.0,
    )
    .unwrap();
    let model = ForwardModel::new(VectorField::zeros(g), params, TimeProfile::affine(1.0, 1.0));
    let rep = fixed_point_solve(&data, &model, &FixedPointOptions::default(), None, true).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.f_hat.max_abs(), 0.0);
    assert_eq!(rep.fixed_point_defect, 0.0);
}

#[test]
fn stationary_term_scales_inversely_with_final_g() {
    let g = grid(16);
    let params = Params::new(0.5, 1.0, 1.0, 3.0, 0.1, 0.01).unwrap();
    let mut rng = FieldRng::new(5);
    let phi = rng.solenoidal(g).unwrap().scaled(0.2);
    let model = ForwardModel::new(VectorField::zeros(g), params, TimeProfile::constant(1.0));
    let make = |c: f64| {
        OverdeterminationData::new(phi.clone(), VectorField::zeros(g), ScalarField::constant(g, c), 0.5).unwrap()
    };
    let base = apply_b_stationary(&make(1.0), &model).unwrap();
    for c in [2.0, 3.5] {
        let scaled = apply_b_stationary(&make(c), &model).unwrap();
        assert!((&scaled.scaled(c) - &base).l2() <= 1e-13 * base.l2());
    }
}

#[test]
fn small_final_g_is_rejected() {
    let g = grid(8);
    let data = OverdeterminationData::new(
        VectorField::zeros(g),
        VectorField::zeros(g),
        ScalarField::constant(g, 0.5),
        1.0,
    );
    assert!(data.is_err());
}

#[test]
fn stokes_eigenvalue_approaches_the_continuum_from_above_two_pi_squared() {
    let coarse = estimate_lambda1(grid(16)).unwrap();
    let fine = estimate_lambda1(grid(32)).unwrap();
    for est in [coarse, fine] {
        assert!(est.lambda1 > TWO_PI_SQ, "{}", est.lambda1);
        assert!(est.lambda1 < 52.35, "{}", est.lambda1);
        assert!(est.residual <= 1e-6 * est.lambda1);
    }
    assert!(fine.lambda1 > coarse.lambda1);
}

#[test]
fn failed_admissibility_needs_an_explicit_override() {
    let g = grid(16);
    let params = Params::new(0.01, 1.0, 0.05, 3.0, 0.05, 0.01).unwrap();
    let phi = FieldRng::new(2).solenoidal(g).unwrap().scaled(5.0);
    let verdict = check_admissibility(&params, &phi, 50.0);
    assert!(!verdict.pass);
    let data = OverdeterminationData::new(phi, VectorField::zeros(g), ScalarField::constant(g, 1.0), 1.0).unwrap();
    let model = ForwardModel::new(VectorField::zeros(g), params, TimeProfile::constant(1.0));
    let mut opts = FixedPointOptions {
        max_iter: 1,
        ..FixedPointOptions::default()
    };
    assert!(fixed_point_solve(&data, &model, &opts, None, verdict.pass).is_err());
    opts.override_admissibility = true;
    let rep = fixed_point_solve(&data, &model, &opts, None, verdict.pass).unwrap();
    assert!(rep.admissibility_overridden);
}

#[test]
fn invalid_iteration_options_are_refused() {
    for opts in [
        FixedPointOptions { omega: 0.0, ..Default::default() },
        FixedPointOptions { omega: 1.5, ..Default::default() },
        FixedPointOptions { tol: 0.0, ..Default::default() },
        FixedPointOptions { max_iter: 0, ..Default::default() },
    ] {
        assert!(opts.validate().is_err());
    }
}

#[test]
fn twin_source_is_recovered() {
    let g = grid(32);
    let params = Params::new(0.5, 5.0, 1.0, 3.0, 0.3, 0.005).unwrap();
    let twin = synthetic_twin(
        g,
        2,
        &params,
        TimeProfile::affine(1.0, 1.0),
        |gr| bump_source(gr, BUMP_AMPLITUDE),
        &SolverOptions::default(),
    )
    .unwrap();
    let verdict = check_admissibility(&params, &twin.data.phi, 52.0);
    assert!(verdict.pass);
    let opts = FixedPointOptions {
        tol: 1e-10,
        ..FixedPointOptions::default()
    };
    let rep = fixed_point_solve(&twin.data, &twin.model, &opts, None, true).unwrap();
    assert!(rep.converged);
    assert!(rep.fixed_point_defect <= 1e-8);
    for w in rep.residual_history.windows(2) {
        assert!(w[1] < w[0], "{:?}", rep.residual_history);
    }
    let err = (&rep.f_hat - &twin.f_true).l2() / twin.f_true.l2();
    assert!(err <= 0.05, "relative error {err}");
}
