mod common;

use std::f64::consts::PI;

use common::pv_transform;
use logpot::{
    hilbert_cauchy, hilbert_indicator, hilbert_pv, hilbert_with, pairing_defect, Grid, Method,
    Samples,
};

fn gauss(x: f64) -> f64 {
    (-x * x).exp()
}

fn odd_gauss(x: f64) -> f64 {
    x * (-x * x).exp()
}

#[test]
fn both_methods_match_quadrature_oracle_on_gaussians() {
    let g = Grid::new(-12.0, 12.0, 4096).unwrap();
    for f in [gauss as fn(f64) -> f64, odd_gauss] {
        let s = Samples::from_fn(g, f).unwrap();
        let spectral = hilbert_with(&s, Method::Spectral);
        let direct = hilbert_with(&s, Method::Pv);
        for i in (0..g.len()).step_by(97) {
            let x = g.node(i);
            if x.abs() > 4.0 {
                continue;
            }
            let want = pv_transform(f, x, 1e4);
            assert!(
                (spectral.values()[i] - want).abs() < 1e-6,
                "spectral at {x}"
            );
            assert!((direct.values()[i] - want).abs() < 1e-4, "direct at {x}");
        }
    }
}

#[test]
fn methods_agree_on_cauchy_samples() {
    let g = Grid::new(-100.0, 100.0, 8192).unwrap();
    let s = Samples::from_fn(g, |x| 1.0 / (1.0 + x * x)).unwrap();
    let a = hilbert_with(&s, Method::Spectral);
    let b = hilbert_with(&s, Method::Pv);
    let mask = g.interior_mask();
    let diff = a.zip_with(&b, |x, y| x - y).unwrap().max_abs_where(&mask);
    assert!(diff <= 5e-3, "spectral and direct differ by {diff:e}");
    let exact = Samples::from_fn(g, hilbert_cauchy).unwrap();
    let err = a
        .zip_with(&exact, |x, y| x - y)
        .unwrap()
        .max_abs_where(&mask);
    assert!(err <= 1e-2, "closed-form error {err:e}");
}

#[test]
fn sampled_indicator_matches_closed_form_away_from_jumps() {
    let g = Grid::new(-16.0, 16.0, 8192).unwrap();
    let (a, b) = (-1.0, 2.0);
    let s = Samples::from_fn(g, |x| if a < x && x < b { 1.0 } else { 0.0 })
        .unwrap()
        .into_compact();
    let h = hilbert_with(&s, Method::Pv);
    let dx = g.spacing();
    let mut worst: f64 = 0.0;
    for i in 0..g.len() {
        let x = g.node(i);
        if (x - a).abs() <= 3.0 * dx || (x - b).abs() <= 3.0 * dx || !g.in_window(x, 0.8) {
            continue;
        }
        worst = worst.max((h.values()[i] - hilbert_indicator(a, b, x).unwrap()).abs());
    }
    assert!(worst <= 5e-3, "indicator error {worst:e}");
}

#[test]
fn transform_is_an_anti_involution_on_smooth_data() {
    // an odd f has an even f̃ decaying like 1/x², so the part of f̃ cut off by
    // the grid hardly affects the second transform near the centre
    let g = Grid::new(-100.0, 100.0, 16384).unwrap();
    let s = Samples::from_fn(g, |x| x * (-x * x / 2.0).exp()).unwrap();
    let back = hilbert_pv(&hilbert_pv(&s));
    let near: Vec<bool> = g.nodes().iter().map(|x| x.abs() <= 10.0).collect();
    let err = back
        .zip_with(&s, |a, b| a + b)
        .unwrap()
        .max_abs_where(&near);
    assert!(err < 1e-4, "H(Hf) + f = {err:e}");
}

#[test]
fn pairing_vanishes_for_decaying_pairs() {
    let g = Grid::new(-12.0, 12.0, 4096).unwrap();
    let f = Samples::from_fn(g, gauss).unwrap();
    let h = Samples::from_fn(g, |x| odd_gauss(x - 0.7)).unwrap();
    assert!(pairing_defect(&f, &h).unwrap().abs() < 1e-10);
    assert!(pairing_defect(&f, &f).unwrap().abs() < 1e-10);
}

#[test]
fn indicator_value_at_a_point() {
    // (1/π) ln|(3 − 0)/(3 − 1)| = ln(1.5)/π
    let v = hilbert_indicator(0.0, 1.0, 3.0).unwrap();
    assert!((v - 1.5f64.ln() / PI).abs() < 1e-15);
}
