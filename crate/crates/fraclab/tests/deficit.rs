use fraclab::bubbles::{Ambient, Bubble, PairKind};
use fraclab::quadrature::{riesz_constant, FunctionRepr, QuadratureSpec};
use fraclab::stability_lab::*;
use fraclab::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-300), rng.gen());
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Plain Monte Carlo for C_R ∫∫ f(x) f(y) |x−y|^(2s−n): x multivariate Cauchy,
/// y = x + w with |w| beta-prime(2s, 1) so the kernel over the proposal is bounded.
fn mc_dual_norm_sq(f: &dyn Fn(&[f64]) -> f64, n: usize, s: f64, samples: usize, seed: u64) -> f64 {
    use fraclab::specfun::lgamma;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let cauchy_norm = (lgamma((nf + 1.0) / 2.0).unwrap() - (nf + 1.0) / 2.0 * std::f64::consts::PI.ln()).exp();
    let omega = fraclab::quadrature::sphere_area(n as u32);
    let mut acc = 0.0;
    for _ in 0..samples {
        let z0 = normal(&mut rng).abs();
        let x: Vec<f64> = (0..n).map(|_| normal(&mut rng) / z0).collect();
        let gx = cauchy_norm * (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(-(nf + 1.0) / 2.0);
        let dir: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let b = rng.gen::<f64>().powf(1.0 / (2.0 * s));
        let rho = b / (1.0 - b);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + rho * di / dn).collect();
        // |w|^(2s-n) / q(w) = ω (1+ρ)^(2s+1) / (2s)
        let ratio = omega * (1.0 + rho).powf(2.0 * s + 1.0) / (2.0 * s);
        acc += f(&x) * f(&y) * ratio / gx;
    }
    riesz_constant(n as u32, s).unwrap() * acc / samples as f64
}

#[test]
fn deficit_of_exact_bubble_vanishes() {
    let amb = Ambient::new(3, 0.5).unwrap();
    let u = FunctionRepr::single(amb, Bubble::new(vec![0.2, 0.0, -0.1], 1.3).unwrap());
    let g = deficit(&u, &spec()).unwrap();
    assert!(g <= 1e-6 * amb.energy().sqrt(), "{g}");
}

#[test]
fn deficit_of_scaled_bubble_matches_closed_form_and_monte_carlo() {
    let amb = Ambient::new(3, 0.5).unwrap();
    let u = FunctionRepr::single(amb, Bubble::at_origin(3, 1.0)).scaled(1.1);
    let g = deficit(&u, &spec()).unwrap();
    // residual is (1.1 − 1.1^p) U^p and ‖U^p‖ = ‖U‖ in the dual norm
    let exact = (1.1 - 1.1f64.powf(amb.p())).abs() * amb.energy().sqrt();
    assert!((g - exact).abs() <= 1e-4 * exact, "{g} vs {exact}");
    let mc = mc_dual_norm_sq(&|x| u.residual_eval(x), 3, 0.5, 400_000, 7).sqrt();
    println!("deficit {g}, closed form {exact}, monte carlo {mc}");
    assert!((g - mc).abs() <= 0.05 * g);
}

#[test]
fn deficit_invariant_under_rescaling_and_translation() {
    let amb = Ambient::new(4, 0.5).unwrap();
    let u = FunctionRepr::single(amb, Bubble::at_origin(4, 1.0)).scaled(1.1);
    let g = deficit(&u, &spec()).unwrap();
    let g2 = deficit(&u.critical_rescaled(2.0), &spec()).unwrap();
    let gt = deficit(&u.translated(&[0.3, -1.0, 0.0, 2.0]), &spec()).unwrap();
    assert!((g2 - g).abs() <= 1e-4 * g, "{g} {g2}");
    assert!((gt - g).abs() <= 1e-4 * g, "{g} {gt}");
}

fn show(label: &str, reps: &[fraclab::stability_lab::DeficitReport]) -> f64 {
    for r in reps {
        println!(
            "{label} d {:e}: Q {:.4e} Γ {:.4e} ± {:.2e} Q/Γ {:.4}",
            r.separation, r.q, r.gamma, r.gamma_std_error, r.q_over_gamma
        );
    }
    let drift = q_gamma_drift(reps);
    println!("{label} drift {drift:.3}");
    drift
}

#[test]
fn q_over_gamma_stable_below_critical_dimension() {
    let amb = Ambient::new(3, 0.75).unwrap();
    let reps = q_gamma_sweep(&amb, PairKind::Cluster, &[1e2, 1e3, 3e3], &spec()).unwrap();
    assert!(show("(3,0.75) cluster", &reps) <= 3.0);
}

#[test]
fn q_over_gamma_stable_at_critical_dimension() {
    let amb = Ambient::new(3, 0.5).unwrap();
    let reps = q_gamma_sweep(&amb, PairKind::Cluster, &[1e2, 1e3, 3e3], &spec()).unwrap();
    assert!(show("(3,0.5) cluster", &reps) <= 3.0);
}

#[test]
fn q_over_gamma_tower_probe() {
    let amb = Ambient::new(3, 0.75).unwrap();
    let reps = q_gamma_sweep(&amb, PairKind::Tower, &[1e4, 1e5, 1e6], &spec()).unwrap();
    assert!(show("(3,0.75) tower", &reps) <= 3.0);
}

// Above n = 6s the deficit of a bare sum decays slower than Q, so Q/Γ keeps falling.
#[test]
#[ignore = "Q/Γ drifts like d^(-1/2) at (4, 0.5); see README"]
fn q_over_gamma_stable_above_critical_dimension_strict() {
    let amb = Ambient::new(4, 0.5).unwrap();
    let reps = q_gamma_sweep(&amb, PairKind::Cluster, &[1e2, 1e3, 3e3], &spec()).unwrap();
    assert!(show("(4,0.5) cluster", &reps) <= 3.0);
}

#[test]
fn sweep_requires_weak_interaction() {
    let amb = Ambient::new(4, 0.5).unwrap();
    assert!(matches!(
        q_gamma_sweep(&amb, PairKind::Cluster, &[1.0], &spec()),
        Err(Error::Precondition(_))
    ));
}
