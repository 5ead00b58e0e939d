use fraclab::quadrature::gk::{integrate, Tol};
use fraclab::specfun::*;
use proptest::prelude::*;
use statrs::function::gamma as sg;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// ∫_0^1 g(t, 1 - t) dt, split at 1/2 with t = u² and 1 - t = v².
fn split_unit(g: impl Fn(f64, f64) -> f64, tol: Tol) -> f64 {
    let h = 0.5f64.sqrt();
    let lo = integrate(|u: f64| 2.0 * u * g(u * u, 1.0 - u * u), 0.0, h, tol).unwrap().value;
    let hi = integrate(|v: f64| 2.0 * v * g(1.0 - v * v, v * v), 0.0, h, tol).unwrap().value;
    lo + hi
}

/// Euler's integral for 2F1 (c > b > 0, z < 1).
fn hyp2f1_euler(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let tol = Tol::new(0.0, 1e-13, 2000);
    let g = |t: f64, t1: f64| t.powf(b - 1.0) * t1.powf(c - b - 1.0) * (1.0 - z * t).powf(-a);
    split_unit(g, tol) / (sg::gamma(b) * sg::gamma(c - b) / sg::gamma(c))
}

#[test]
fn gamma_matches_reference_on_a_sweep() {
    let mut worst = 0.0f64;
    let mut x: f64 = -9.75;
    while x < 150.0 {
        if x.fract() != 0.0 || x > 0.0 {
            worst = worst.max(rel(gamma(x).unwrap(), sg::gamma(x)));
        }
        x += 0.125;
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn hyp2f1_elementary_cases() {
    for z in [-50.0, -3.0, -0.5, 0.2, 0.7, 0.95] {
        // 2F1(1, 1; 2; z) = -ln(1 - z)/z
        assert!(rel(hyp2f1_abcz(1.0, 1.0, 2.0, z).unwrap(), -(1.0 - z).ln() / z) < 1e-12, "z={z}");
        // 2F1(a, b; b; z) = (1 - z)^(-a)
        assert!(rel(hyp2f1_abcz(0.7, 1.3, 1.3, z).unwrap(), (1.0 - z).powf(-0.7)) < 1e-12, "z={z}");
        // 2F1(1/2, 1; 3/2; -x²) = atan(x)/x
        if z < 0.0 {
            let x = (-z).sqrt();
            assert!(rel(hyp2f1_abcz(0.5, 1.0, 1.5, z).unwrap(), x.atan() / x) < 1e-12, "z={z}");
        }
    }
    assert_eq!(hyp2f1_abcz(0.3, 0.4, 0.5, 0.0).unwrap(), 1.0);
}

#[test]
fn bubble_hypergeometric_has_no_zeros_on_a_dense_grid() {
    for (n, s) in [(3u32, 0.5), (4, 0.5), (3, 0.7), (5, 0.9), (8, 0.99)] {
        assert_eq!(hyp2f1_zero_count(n, s).unwrap(), 0);
        let changes = (0..4000)
            .map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 3999.0))
            .map(|r| hyp2f1_abcz(n as f64 / 2.0 + s, 2.0 * s, n as f64 / 2.0, -r * r).unwrap())
            .collect::<Vec<_>>()
            .windows(2)
            .filter(|w| w[0].signum() != w[1].signum())
            .count();
        assert_eq!(changes, 0, "({n},{s})");
    }
    assert!(hyp2f1_zero_count(2, 0.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gamma_agrees_with_reference(x in 0.01f64..160.0) {
        prop_assert!(rel(gamma(x).unwrap(), sg::gamma(x)) < 1e-12);
    }

    #[test]
    fn lgamma_agrees_with_reference(x in 0.01f64..1e6) {
        let (a, b) = (lgamma(x).unwrap(), sg::ln_gamma(x));
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn digamma_agrees_with_reference(x in 0.05f64..1e4) {
        let (a, b) = (digamma(x).unwrap(), sg::digamma(x));
        prop_assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0));
    }

    #[test]
    fn gamma_recurrence(x in -20.0f64..150.0) {
        prop_assume!((x - x.round()).abs() > 1e-3);
        prop_assert!(rel(gamma(x + 1.0).unwrap(), x * gamma(x).unwrap()) < 1e-12);
    }

    #[test]
    fn gamma_reflection(x in 0.001f64..0.999) {
        prop_assert!(rel(gamma(x).unwrap() * gamma(1.0 - x).unwrap(), PI / (PI * x).sin()) < 1e-13);
    }

    #[test]
    fn beta_symmetric_and_matches_gamma_ratio(a in 0.05f64..40.0, b in 0.05f64..40.0) {
        let v = beta(a, b).unwrap();
        prop_assert!(rel(v, beta(b, a).unwrap()) < 1e-14);
        prop_assert!(rel(v, (sg::ln_gamma(a) + sg::ln_gamma(b) - sg::ln_gamma(a + b)).exp()) < 1e-11);
    }

    #[test]
    fn beta_matches_euler_integral(a in 0.3f64..6.0, b in 0.3f64..6.0) {
        let tol = Tol::new(0.0, 1e-13, 2000);
        let e = split_unit(|t, t1| t.powf(a - 1.0) * t1.powf(b - 1.0), tol);
        prop_assert!(rel(beta(a, b).unwrap(), e) < 1e-10);
    }

    #[test]
    fn hyp2f1_matches_euler_integral(a in -2.5f64..3.0, b in 0.2f64..3.0, gap in 0.2f64..3.0, z in -60.0f64..0.9) {
        let c = b + gap;
        let v = hyp2f1_abcz(a, b, c, z).unwrap();
        let e = hyp2f1_euler(a, b, c, z);
        prop_assert!((v - e).abs() <= 1e-9 * e.abs().max(1e-3), "2F1({a},{b};{c};{z}) = {v} vs {e}");
    }

    #[test]
    fn hyp2f1_symmetric_in_numerator_parameters(a in -3.0f64..4.0, b in -3.0f64..4.0, c in 0.3f64..6.0, z in -30.0f64..0.9) {
        let (x, y) = (hyp2f1_abcz(a, b, c, z).unwrap(), hyp2f1_abcz(b, a, c, z).unwrap());
        prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
    }

    #[test]
    fn hyp2f1_euler_transformation(a in -2.0f64..3.0, b in -2.0f64..3.0, c in 0.3f64..5.0, z in -20.0f64..0.8) {
        // 2F1(a, b; c; z) = (1 - z)^(c - a - b) 2F1(c - a, c - b; c; z)
        let lhs = hyp2f1_abcz(a, b, c, z).unwrap();
        let rhs = (1.0 - z).powf(c - a - b) * hyp2f1_abcz(c - a, c - b, c, z).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn zero_count_matches_positivity(n in 3u32..10, s in 0.05f64..0.999) {
        prop_assume!(n as f64 > 4.0 * s);
        prop_assert_eq!(hyp2f1_zero_count(n, s).unwrap(), 0);
        let r = 10f64.powf(3.0);
        prop_assert!(hyp2f1_abcz(n as f64 / 2.0 + s, 2.0 * s, n as f64 / 2.0, -r * r).unwrap() > 0.0);
    }
}
