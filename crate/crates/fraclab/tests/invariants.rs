use fraclab::bubbles::*;
use fraclab::fraclap::{fraclap_inverse_quadratic, fraclap_radial_numeric, inverse_quadratic_prefactor, FracOrder, RadialProfile};
use fraclab::quadrature::gk::{integrate, Tol};
use fraclab::quadrature::{hs_inner, hs_inner_invariant, FunctionRepr, QuadratureSpec};
use fraclab::weights::F_min_approx;
use proptest::prelude::*;

fn ambient() -> impl Strategy<Value = Ambient> {
    prop_oneof![Just((3u32, 0.5)), Just((4, 0.5)), Just((3, 0.75)), Just((5, 0.3))].prop_map(|(n, s)| Ambient::new(n, s).unwrap())
}

fn bubble(n: usize) -> impl Strategy<Value = Bubble> {
    (prop::collection::vec(-5.0f64..5.0, n), -3.0f64..3.0).prop_map(|(z, ll)| Bubble::new(z, ll.exp()).unwrap())
}

fn amb_with_pair() -> impl Strategy<Value = (Ambient, Bubble, Bubble)> {
    ambient().prop_flat_map(|a| {
        let n = a.n() as usize;
        (Just(a), bubble(n), bubble(n))
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bubble_is_a_rescaled_standard_bubble((a, b, _) in amb_with_pair(), x in prop::collection::vec(-8.0f64..8.0, 5)) {
        let n = a.n() as usize;
        let x = &x[..n];
        let y: Vec<f64> = x.iter().zip(&b.z).map(|(xi, zi)| b.lambda * (xi - zi)).collect();
        let unit = bubble_eval(&a, &Bubble::at_origin(a.n(), 1.0), &y);
        prop_assert!(close(bubble_eval(&a, &b, x), b.lambda.powf(a.m()) * unit, 1e-12));
    }

    #[test]
    fn interaction_is_symmetric_and_conformally_invariant((a, b1, b2) in amb_with_pair(), mu in -2.0f64..2.0, shift in prop::collection::vec(-10.0f64..10.0, 5)) {
        let q = q_ij(&a, &b1, &b2);
        prop_assert!(close(q, q_ij(&a, &b2, &b1), 1e-14));
        prop_assert!(q > 0.0 && q <= 2f64.powf(-a.m()) * (1.0 + 1e-12));
        let mu = mu.exp();
        let map = |b: &Bubble| Bubble::new(b.z.iter().zip(&shift).map(|(z, v)| mu * z + v).collect(), b.lambda / mu).unwrap();
        prop_assert!(close(q, q_ij(&a, &map(&b1), &map(&b2)), 1e-10));
    }

    #[test]
    fn family_json_round_trip((a, b1, b2) in amb_with_pair(), alphas in prop::option::of(prop::collection::vec(0.1f64..3.0, 2))) {
        let fam = BubbleFamily::new(a, vec![b1, b2], alphas).unwrap();
        let back = BubbleFamily::from_json(&fam.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.bubbles, fam.bubbles);
        prop_assert_eq!(back.alphas, fam.alphas);
        prop_assert_eq!(back.ambient.n(), a.n());
    }

    #[test]
    fn min_approx_is_homogeneous_and_below_min(x in 0.0f64..1e6, y in 0.0f64..1e6, t in 1e-3f64..1e3, mu in 0.01f64..0.49) {
        let f = F_min_approx(x, y, mu).unwrap();
        prop_assert!(f >= -1e-9 * x.max(y) && f <= x.min(y) * (1.0 + 1e-12) + 1e-300);
        prop_assert!(close(F_min_approx(t * x, t * y, mu).unwrap(), t * f, 1e-9) || f.abs() < 1e-9 * x.max(y));
    }

    #[test]
    fn gauss_kronrod_integrates_powers(k in 0.0f64..12.0, hi in 0.1f64..4.0) {
        let v = integrate(|x: f64| x.powf(k), 0.0, hi, Tol::new(0.0, 1e-13, 500)).unwrap().value;
        prop_assert!(close(v, hi.powf(k + 1.0) / (k + 1.0), 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn numeric_fractional_laplacian_matches_closed_form(n in 2u32..6, t in 0.1f64..0.9, rho in 0.3f64..3.0, r in 0.0f64..20.0) {
        let ft = FracOrder::new(t).unwrap();
        let num = fraclap_radial_numeric(&RadialProfile::inverse_quadratic(rho), n, ft, r).unwrap();
        let cf = fraclap_inverse_quadratic(n, ft, rho, r).unwrap();
        let scale = cf.abs().max(1e-3 * inverse_quadratic_prefactor(n, ft, rho).unwrap() * (1.0 + r * r).powf(-rho - t));
        prop_assert!(((num - cf) / scale).abs() < 1e-6, "{num} vs {cf}");
    }

    #[test]
    fn fractional_laplacian_commutes_with_dilation(n in 2u32..5, t in 0.1f64..0.9, rho in 0.5f64..2.0, lambda in -1.5f64..1.5, r in 0.01f64..5.0) {
        // (-Δ)^t [f(λ·)](r) = λ^(2t) [(-Δ)^t f](λr)
        let lambda = lambda.exp();
        let ft = FracOrder::new(t).unwrap();
        let lhs = fraclap_radial_numeric(&RadialProfile::inverse_quadratic(rho).rescaled(lambda), n, ft, r).unwrap();
        let rhs = lambda.powf(2.0 * t) * fraclap_inverse_quadratic(n, ft, rho, lambda * r).unwrap();
        let scale = rhs.abs().max(1e-3 * lambda.powf(2.0 * t) * inverse_quadratic_prefactor(n, ft, rho).unwrap() * (1.0 + (lambda * r).powi(2)).powf(-rho - t));
        prop_assert!(((lhs - rhs) / scale).abs() < 1e-6, "{lhs} vs {rhs}");
    }

    #[test]
    fn hs_inner_paths_agree_and_are_invariant((a, b1, b2) in amb_with_pair(), mu in -1.0f64..1.0) {
        let spec = QuadratureSpec::default();
        let (u, v) = (FunctionRepr::single(a, b1), FunctionRepr::single(a, b2));
        let slow = hs_inner(&u, &v, &spec).unwrap();
        let fast = hs_inner_invariant(&u, &v, &spec).unwrap();
        prop_assert!((slow - fast).abs() <= 1e-7 * a.energy(), "{slow} vs {fast}");
        prop_assert!(close(slow, hs_inner(&v, &u, &spec).unwrap(), 1e-9) || slow.abs() < 1e-12 * a.energy());
        let mu = mu.exp();
        let moved = hs_inner_invariant(&u.critical_rescaled(mu), &v.critical_rescaled(mu), &spec).unwrap();
        prop_assert!((moved - fast).abs() <= 1e-9 * a.energy());
        prop_assert!(fast > 0.0 && fast <= a.energy() * (1.0 + 1e-9));
    }
}
