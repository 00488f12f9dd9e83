mod support;

use daf_core::specfun::*;
use support::{e1_series_oracle, j0_oracle, scaled_e1_oracle};

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

#[test]
fn j0_matches_integral_representation() {
    for i in 0..=1000 {
        let x = 0.1 * i as f64;
        let got = bessel_j0(x).unwrap();
        let want = j0_oracle(x);
        assert!((got - want).abs() <= 1e-12, "x={x}: {got} vs {want}");
        assert!(got.abs() <= 1.0);
    }
    for x in log_grid(1e-6, 100.0, 1000) {
        assert!((bessel_j0(x).unwrap() - j0_oracle(x)).abs() <= 1e-12, "x={x}");
    }
}

#[test]
fn scaled_e1_matches_quadrature() {
    for x in log_grid(1e-8, 1e12, 1000) {
        let got = exp_scaled_e1(x).unwrap();
        let want = scaled_e1_oracle(x);
        assert!((got - want).abs() / want <= 1e-10, "x={x}: {got} vs {want}");
    }
}

#[test]
fn e1_relative_accuracy() {
    for x in log_grid(1e-8, 700.0, 1000) {
        let got = exp_e1(x).unwrap();
        let want = if x <= 2.0 {
            e1_series_oracle(x)
        } else {
            scaled_e1_oracle(x) * (-x).exp()
        };
        assert!((got - want).abs() / want <= 1e-12, "x={x}: {got} vs {want}");
    }
}

#[test]
fn tabulated_values() {
    assert!((exp_e1(1.0).unwrap() - 0.219_383_934_395_520_3).abs() / 0.2193839 <= 1e-10);
    let small = -EULER_GAMMA - 1e-6f64.ln() + 1e-6;
    assert!((exp_e1(1e-6).unwrap() - small).abs() / small <= 1e-12);
    assert!((exp_scaled_e1(0.01).unwrap() - 4.078_511_443_456_426).abs() < 1e-12);
    assert!((exp_scaled_e1(1.0).unwrap() - 0.596_347_362_323_194).abs() < 1e-12);
    let x = 500.0;
    assert!((x * exp_scaled_e1(x).unwrap() - 1.0).abs() < 1.0 / x);
}

#[test]
fn scaled_form_is_consistent() {
    for x in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let s = exp_scaled_e1(x).unwrap();
        assert!((s - x.exp() * exp_e1(x).unwrap()).abs() / s <= 1e-10);
        let v = SpecialValue::exp_scaled_e1(x).unwrap();
        assert!(v.abs_error_bound >= 0.0 && v.value == s);
    }
}

#[test]
fn e1_is_decreasing() {
    let xs: Vec<f64> = log_grid(0.01, 50.0, 200).collect();
    for w in xs.windows(2) {
        assert!(exp_e1(w[1]).unwrap() < exp_e1(w[0]).unwrap());
    }
}
