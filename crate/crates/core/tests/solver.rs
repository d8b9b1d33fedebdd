mod common;

use std::f64::consts::{LN_2, PI, SQRT_2};

use common::{kkt_oracle, sup_where};
use logpot::{
    assemble_energy, minimize, minimize_from, solve_equilibrium, uniqueness_probe, DiscreteMeasure,
    Field, Grid, ResultFile, SolverOptions,
};

fn zero_field() -> Field {
    Field::polynomial(vec![0.0]).unwrap()
}

fn masses_match_oracle(field: &Field, v: impl Fn(f64) -> f64, lo: f64, hi: f64) {
    let n = 64;
    let oracle = kkt_oracle(v, lo, hi, n);
    let grid = Grid::new(lo, hi, n).unwrap();
    let model = assemble_energy(&grid, field).unwrap();
    let opts = SolverOptions {
        kkt_tol: 1e-11,
        ..Default::default()
    };
    let out = minimize(&model, &opts).unwrap();
    assert!(out.converged);
    let m = out.measure.masses();
    let gap = sup_where(&m, &oracle.masses, |_| true);
    assert!(
        gap < 1e-7,
        "masses differ from the active-set oracle by {gap:e}"
    );
    let res = solve_equilibrium(field, lo, hi, n, &opts).unwrap();
    assert!(
        (res.constant - oracle.constant).abs() < 1e-7,
        "F = {} vs oracle {}",
        res.constant,
        oracle.constant
    );
}

#[test]
fn small_grid_matches_active_set_oracle() {
    masses_match_oracle(&zero_field(), |_| 0.0, -1.0, 1.0);
    masses_match_oracle(&Field::quadratic(1.0).unwrap(), |x| x * x, -3.0, 3.0);
    masses_match_oracle(&Field::quadratic(0.5).unwrap(), |x| 0.5 * x * x, -3.0, 3.0);
    masses_match_oracle(&Field::arctan(), f64::atan, -10.0, 10.0);
    masses_match_oracle(
        &Field::cauchy_log(),
        |x| 0.5 * (x * x + 1.0).ln(),
        -10.0,
        10.0,
    );
}

#[test]
fn zero_field_gives_arcsine_law_with_robin_constant_ln2() {
    let oracle = kkt_oracle(|_| 0.0, -1.0, 1.0, 64);
    assert!(
        (oracle.constant - LN_2).abs() < 2e-2,
        "oracle F = {}",
        oracle.constant
    );

    let res = solve_equilibrium(&zero_field(), -1.0, 1.0, 1024, &SolverOptions::default()).unwrap();
    assert!(res.converged);
    assert!((res.constant - LN_2).abs() < 5e-3, "F = {}", res.constant);
    let g = res.measure.grid();
    let w = res.measure.weights();
    let mut worst: f64 = 0.0;
    for (x, wi) in g.nodes().into_iter().zip(w) {
        if x.abs() <= 0.8 {
            let exact = 1.0 / (PI * (1.0 - x * x).sqrt());
            worst = worst.max((wi - exact).abs() / exact);
        }
    }
    assert!(worst < 2e-2, "relative interior error {worst:e}");
}

#[test]
fn cauchy_field_reproduces_cauchy_density() {
    let res = solve_equilibrium(
        &Field::cauchy_log(),
        -40.0,
        40.0,
        2048,
        &SolverOptions::default(),
    )
    .unwrap();
    assert!(res.converged);
    let g = res.measure.grid();
    let exact: Vec<f64> = g
        .nodes()
        .iter()
        .map(|t| 1.0 / (PI * (1.0 + t * t)))
        .collect();
    let err = sup_where(res.measure.weights(), &exact, |i| g.node(i).abs() <= 5.0);
    assert!(err < 2e-2, "sup error {err:e}");
    assert!(res.constant.abs() < 5e-2, "F = {}", res.constant);
    assert_eq!(res.support.len(), 1);
    assert_eq!((res.support[0].lo, res.support[0].hi), (-40.0, 40.0));
}

#[test]
fn quadratic_support_and_density() {
    // V = t·x² has equilibrium density (2t/π)√(1/t − x²) on |x| ≤ 1/√t
    for (t, edge) in [(0.5, SQRT_2), (1.0, 1.0)] {
        let res = solve_equilibrium(
            &Field::quadratic(t).unwrap(),
            -3.0,
            3.0,
            2048,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        let dx = res.measure.grid().spacing();
        assert_eq!(res.support.len(), 1);
        let s = res.support[0];
        assert!(
            (s.lo + edge).abs() <= 2.0 * dx,
            "t = {t}: lower edge {}",
            s.lo
        );
        assert!(
            (s.hi - edge).abs() <= 2.0 * dx,
            "t = {t}: upper edge {}",
            s.hi
        );
        let g = res.measure.grid();
        let exact: Vec<f64> = g
            .nodes()
            .iter()
            .map(|x| 2.0 * t / PI * (1.0 / t - x * x).max(0.0).sqrt())
            .collect();
        let err = sup_where(res.measure.weights(), &exact, |i| {
            g.node(i).abs() < 0.9 * edge
        });
        assert!(err < 2e-2, "t = {t}: interior error {err:e}");
        assert!(res.residuals.eq_residual_max <= 2e-2);
        assert!(res.residuals.ineq_violation_max <= 1e-3);
    }
}

#[test]
fn truncated_arctan_piles_up_at_the_left_wall() {
    let res = solve_equilibrium(
        &Field::arctan(),
        -10.0,
        10.0,
        2048,
        &SolverOptions::default(),
    )
    .unwrap();
    assert!(res.converged);
    assert_eq!(res.support.len(), 1);
    let s = res.support[0];
    assert_eq!(s.lo, -10.0);
    assert!(s.hi < 0.0, "support reaches {}", s.hi);
    let w = res.measure.weights();
    assert!(w[0] > w[w.len() / 4]);
}

#[test]
fn kkt_bound_and_monotone_energy_on_catalog() {
    let opts = SolverOptions::default();
    for (field, lo, hi) in [
        (Field::cauchy_log(), -40.0, 40.0),
        (Field::quadratic(1.0).unwrap(), -3.0, 3.0),
        (Field::arctan(), -10.0, 10.0),
        (
            Field::polynomial(vec![0.0, 0.3, 0.0, 0.0, 0.2]).unwrap(),
            -3.0,
            3.0,
        ),
    ] {
        let grid = Grid::new(lo, hi, 1024).unwrap();
        let model = assemble_energy(&grid, &field).unwrap();
        let out = minimize(&model, &opts).unwrap();
        assert!(out.converged, "{field}");
        assert!(out.energy_trace.windows(2).all(|w| w[1] <= w[0]), "{field}");

        let res = solve_equilibrium(&field, lo, hi, 1024, &opts).unwrap();
        let bound = 10.0 * opts.kkt_tol * (1.0 + res.constant.abs());
        assert!(
            res.residuals.eq_residual_max <= bound,
            "{field}: {} > {bound}",
            res.residuals.eq_residual_max
        );
        assert!(res.residuals.ineq_violation_max <= bound, "{field}");
        for (h, w) in res.h_plus.values().iter().zip(res.measure.weights()) {
            assert_eq!(*h, (PI * w).powi(2));
        }
        for pair in res.support.windows(2) {
            assert!(pair[0].hi < pair[1].lo);
        }
    }
}

#[test]
fn two_starts_reach_the_same_measure() {
    let opts = SolverOptions::default();
    for (field, lo, hi) in [
        (Field::cauchy_log(), -40.0, 40.0),
        (Field::quadratic(1.0).unwrap(), -3.0, 3.0),
        (Field::arctan(), -10.0, 10.0),
    ] {
        let grid = Grid::new(lo, hi, 1024).unwrap();
        let model = assemble_energy(&grid, &field).unwrap();
        for seed in [1, 2] {
            let gap = uniqueness_probe(&model, &opts, seed).unwrap();
            assert!(gap <= 1e-3, "{field}, seed {seed}: gap {gap:e}");
        }
    }
}

#[test]
fn cauchy_error_shrinks_under_refinement() {
    let errors: Vec<f64> = [512, 1024, 2048]
        .iter()
        .map(|&n| {
            let res = solve_equilibrium(
                &Field::cauchy_log(),
                -40.0,
                40.0,
                n,
                &SolverOptions::default(),
            )
            .unwrap();
            let g = res.measure.grid();
            let exact: Vec<f64> = g
                .nodes()
                .iter()
                .map(|t| 1.0 / (PI * (1.0 + t * t)))
                .collect();
            sup_where(res.measure.weights(), &exact, |i| {
                g.in_window(g.node(i), 0.8)
            })
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[0] >= 1.5 * w[1], "errors {errors:?}");
    }
}

#[test]
fn warm_start_from_solution_stops_immediately() {
    let grid = Grid::new(-3.0, 3.0, 256).unwrap();
    let model = assemble_energy(&grid, &Field::quadratic(1.0).unwrap()).unwrap();
    let opts = SolverOptions::default();
    let first = minimize(&model, &opts).unwrap();
    let again = minimize_from(&model, &opts, &first.measure).unwrap();
    assert!(again.converged);
    assert_eq!(again.iterations, 0);

    let other = Grid::new(-3.0, 3.0, 128).unwrap();
    assert!(minimize_from(&model, &opts, &DiscreteMeasure::uniform(other)).is_err());
}

#[test]
fn result_json_round_trip() {
    let res = solve_equilibrium(
        &Field::quadratic(1.0).unwrap(),
        -3.0,
        3.0,
        256,
        &SolverOptions::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    res.save_json(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for key in [
        "\"grid\"",
        "\"weights\"",
        "\"support\"",
        "\"F\"",
        "\"residuals\"",
        "\"h_plus\"",
        "\"options\"",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
    let back = ResultFile::load(&path).unwrap().into_result().unwrap();
    assert_eq!(back.measure.weights(), res.measure.weights());
    assert_eq!(back.constant, res.constant);
    assert_eq!(back.residuals, res.residuals);
    assert_eq!(back.support, res.support);
    assert_eq!(back.options, res.options);
}
