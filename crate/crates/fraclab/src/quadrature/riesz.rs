//! Dual norm ‖f‖²_{Ḣ^{-s}} = C_R ∬ f(x) f(y) |x-y|^(2s-n) dx dy.

use super::gk::{self, Tol};
use super::qmc::{direction, RadialLaw, SobolStream, MAX_POINTS};
use super::radial::integrate_radial_tol;
use super::{sphere_area, QuadratureSpec};
use crate::bubbles::{Ambient, Bubble};
use crate::error::{Error, Result};
use crate::fraclap::angular_kernel;
use crate::specfun::gamma;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const REPLICATES: u32 = 8;

/// Γ(n/2 - s) / (4^s π^(n/2) Γ(s)), the constant of (-Δ)^(-s) as a Riesz potential.
pub fn riesz_constant(n: u32, s: f64) -> Result<f64> {
    let h = n as f64 / 2.0;
    Ok(gamma(h - s)? / (4f64.powf(s) * PI.powf(h) * gamma(s)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormPath {
    Radial,
    Qmc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualNorm {
    pub value: f64,
    pub squared: f64,
    /// Standard error of `squared` (0 on the deterministic path).
    pub std_error: f64,
    pub path: NormPath,
}

/// Where f lives: the bubble cores that set its length scales, whether it is
/// radial about the first core, and its power decay at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSupport {
    pub cores: Vec<Bubble>,
    pub radial: bool,
    pub decay: f64,
}

/// ∫ f(|y|) |x-y|^(2s-n) dy at |x| = r for radial f with f(ρ) ~ ρ^(-decay).
pub fn riesz_potential_radial<F: Fn(f64) -> f64>(f: &F, n: u32, s: f64, r: f64, scales: &[f64], decay: f64) -> Result<f64> {
    let e = (n as f64 - 2.0 * s) / 2.0;
    let omega = sphere_area(n);
    let w = scales.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    let big = scales.iter().copied().fold(r.max(1.0), f64::max);
    let h = if r > 0.0 { (1e-4 * r.max(w)).min(0.5 * r) } else { 1e-4 * w };
    // ball |x - y| < h with f frozen at x; the first-order term vanishes by symmetry
    let ball = f(r) * omega * h.powf(2.0 * s) / (2.0 * s);
    let rho_max = big * 1e6;
    let mut pts = gk::geometric(1e-3 * w, rho_max, 2.0);
    pts.extend_from_slice(scales);
    pts.push(r);
    let mut k = h;
    while k < rho_max && k < 1e3 * big {
        pts.push(r + k);
        if k < r {
            pts.push(r - k);
        }
        k *= 2.0;
    }
    let pts = gk::panel_points(0.0, rho_max, pts);
    let inner_tol = Tol::new(0.0, 1e-10, 600);
    let mut failure = None;
    let est = gk::integrate_panels(
        |rho| {
            let v = f(rho);
            if v == 0.0 {
                return 0.0;
            }
            match angular_kernel(n, r, rho, e, h, inner_tol) {
                Ok(kk) => v * rho.powi(n as i32 - 1) * kk,
                Err(err) => {
                    failure.get_or_insert(err);
                    f64::NAN
                }
            }
        },
        &pts,
        Tol::new(0.0, 1e-9, 4000).l1(),
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let tail = omega * f(rho_max) * rho_max.powf(2.0 * s) / (decay - 2.0 * s);
    Ok(ball + est?.value + tail)
}

/// ‖f‖_{Ḣ^{-s}}. Radial inputs use nested deterministic quadrature; everything
/// else uses scrambled Sobol points with importance sampling around the cores.
pub fn neg_sobolev_norm<F: Fn(&[f64]) -> f64>(f: F, amb: &Ambient, support: &NormSupport, spec: &QuadratureSpec) -> Result<DualNorm> {
    let n = amb.n();
    let s = amb.s();
    let nf = n as f64;
    if !(support.decay > (nf + 2.0 * s) / 2.0) {
        return Err(Error::Domain(format!(
            "decay {} too slow for the dual norm (need > (n+2s)/2)",
            support.decay
        )));
    }
    if support.cores.is_empty() {
        return Err(Error::Domain("dual norm needs at least one core".into()));
    }
    if support.cores.iter().any(|b| b.z.len() != n as usize) {
        return Err(Error::Domain("core dimension differs from ambient".into()));
    }
    let cr = riesz_constant(n, s)?;
    if support.radial {
        let z0 = &support.cores[0].z;
        let fr = |r: f64| {
            let mut x = z0.clone();
            x[0] += r;
            f(&x)
        };
        let scales: Vec<f64> = support.cores.iter().map(|b| 1.0 / b.lambda).collect();
        let d = support.decay;
        let prod_decay = d + d.min(nf) - 2.0 * s;
        let mut failure = None;
        let sq = integrate_radial_tol(
            |r| {
                let v = fr(r);
                if v == 0.0 {
                    return 0.0;
                }
                match riesz_potential_radial(&fr, n, s, r, &scales, d) {
                    Ok(p) => v * p,
                    Err(err) => {
                        failure.get_or_insert(err);
                        f64::NAN
                    }
                }
            },
            n,
            prod_decay,
            &scales,
            Tol::new(0.0, spec.rel_tol.max(1e-8), spec.max_refinements).l1(),
        );
        if let Some(err) = failure {
            return Err(err);
        }
        let sq = cr * sq?;
        return finish(sq, 0.0, NormPath::Radial);
    }
    let (mean, se) = qmc_double_integral(&f, amb, &support.cores, spec)?;
    finish(cr * mean, cr * se, NormPath::Qmc)
}

fn finish(sq: f64, se: f64, path: NormPath) -> Result<DualNorm> {
    if !sq.is_finite() {
        return Err(Error::NonConvergence("dual norm integral is not finite".into()));
    }
    let floor = if path == NormPath::Radial { 1e-8 * sq.abs() } else { 3.0 * se };
    if sq < -floor && sq < -1e-300 {
        return Err(Error::NonConvergence(format!(
            "negative squared dual norm {sq:e} (standard error {se:e})"
        )));
    }
    Ok(DualNorm {
        value: sq.max(0.0).sqrt(),
        squared: sq,
        std_error: se,
        path,
    })
}

struct Mixture {
    comps: Vec<(Vec<f64>, RadialLaw)>,
}

impl Mixture {
    fn around(cores: &[Bubble], s: f64) -> Self {
        let mut comps = Vec::new();
        for (i, b) in cores.iter().enumerate() {
            let w = 1.0 / b.lambda;
            comps.push((
                b.z.clone(),
                RadialLaw::Lomax {
                    lambda: b.lambda,
                    a: 2.0 * s,
                },
            ));
            let reach = cores
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, c)| 2.0 * (b.center_dist(c) + 1.0 / c.lambda))
                .fold(0.0, f64::max);
            if reach > 10.0 * w {
                comps.push((b.z.clone(), RadialLaw::LogUniform { lo: w, hi: reach }));
                comps.push((
                    b.z.clone(),
                    RadialLaw::Lomax {
                        lambda: 1.0 / reach,
                        a: 2.0 * s,
                    },
                ));
            }
        }
        Self { comps }
    }

    fn density(&self, n: u32, omega: f64, x: &[f64]) -> f64 {
        let k = self.comps.len() as f64;
        self.comps
            .iter()
            .map(|(c, law)| {
                let r = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                law.density(n, omega, r)
            })
            .sum::<f64>()
            / k
    }

    /// Sample from uniforms: [component, radius, direction(n)].
    fn sample(&self, n: u32, u: &[f64], dir: &mut [f64], out: &mut [f64]) {
        let k = ((u[0] * self.comps.len() as f64) as usize).min(self.comps.len() - 1);
        let (c, law) = &self.comps[k];
        let r = law.sample_radius(n, u[1]);
        direction(&u[2..], dir);
        for ((o, ci), d) in out.iter_mut().zip(c).zip(dir.iter()) {
            *o = ci + r * d;
        }
    }
}

/// (mean, standard error) of ∬ f(x) f(y) |x-y|^(2s-n).
fn qmc_double_integral<F: Fn(&[f64]) -> f64>(f: &F, amb: &Ambient, cores: &[Bubble], spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let n = amb.n();
    let nu = n as usize;
    let s = amb.s();
    let omega = sphere_area(n);
    let mix = Mixture::around(cores, s);
    let dim = 2 * n + 5;
    let npts = spec.qmc_samples.min(MAX_POINTS);
    let kernel_pow = 2.0 * s - n as f64;
    let mut means = Vec::with_capacity(REPLICATES as usize);
    let mut u = vec![0.0; dim as usize];
    let (mut x, mut y, mut dir) = (vec![0.0; nu], vec![0.0; nu], vec![0.0; nu]);
    for rep in 0..REPLICATES {
        let mut stream = SobolStream::new(spec.seed, rep, dim);
        let mut acc = 0.0;
        for i in 0..npts {
            stream.point(i, &mut u);
            mix.sample(n, &u[0..nu + 2], &mut dir, &mut x);
            let fx = f(&x);
            if fx == 0.0 {
                continue;
            }
            let px = mix.density(n, omega, &x);
            let rho_loc = cores
                .iter()
                .map(|b| 1.0 / b.lambda + b.dist2(&x).sqrt())
                .fold(f64::INFINITY, f64::min)
                * 0.5;
            let uy = &u[nu + 2..];
            if uy[0] < 0.5 {
                mix.sample(n, &uy[1..nu + 3], &mut dir, &mut y);
            } else {
                let r = rho_loc * uy[2].powf(1.0 / (2.0 * s));
                direction(&uy[3..], &mut dir);
                for k in 0..nu {
                    y[k] = x[k] + r * dir[k];
                }
            }
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist == 0.0 {
                continue;
            }
            let kern_density = if dist <= rho_loc {
                2.0 * s / (omega * rho_loc.powf(2.0 * s)) * dist.powf(kernel_pow)
            } else {
                0.0
            };
            let q = 0.5 * mix.density(n, omega, &y) + 0.5 * kern_density;
            acc += fx * f(&y) * dist.powf(kernel_pow) / (px * q);
        }
        means.push(acc / npts as f64);
    }
    let r = means.len() as f64;
    let mean = means.iter().sum::<f64>() / r;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (r - 1.0);
    if !mean.is_finite() {
        return Err(Error::NonConvergence("QMC estimate is not finite".into()));
    }
    Ok((mean, (var / r).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::bubble_eval;

    #[test]
    fn riesz_potential_inverts_the_bubble_equation() {
        // C_R I(U^p) = U since (-Δ)^s U = U^p
        for (n, s) in [(3u32, 0.5), (4, 0.5), (3, 0.75)] {
            let a = Ambient::new(n, s).unwrap();
            let cr = riesz_constant(n, s).unwrap();
            let f = |r: f64| a.bubble_radial(1.0, r).powf(a.p());
            for r in [0.0, 0.3, 1.0, 7.0] {
                let v = cr * riesz_potential_radial(&f, n, s, r, &[1.0], n as f64 + 2.0 * s).unwrap();
                let u = a.bubble_radial(1.0, r);
                assert!(((v - u) / u).abs() < 1e-7, "({n},{s}) r={r}: {v} vs {u}");
            }
        }
    }

    #[test]
    fn radial_calibration_and_scale_invariance() {
        let a = Ambient::new(3, 0.5).unwrap();
        let spec = QuadratureSpec::default();
        for lam in [0.5, 1.0, 2.0] {
            let b = Bubble::at_origin(3, lam);
            let sup = NormSupport {
                cores: vec![b.clone()],
                radial: true,
                decay: 3.0 + 1.0,
            };
            let v = neg_sobolev_norm(|x| bubble_eval(&a, &b, x).powf(a.p()), &a, &sup, &spec).unwrap();
            assert!(
                ((v.squared - a.energy()) / a.energy()).abs() < 1e-6,
                "λ={lam}: {} vs {}",
                v.squared,
                a.energy()
            );
        }
    }

    #[test]
    fn qmc_calibration() {
        let a = Ambient::new(3, 0.5).unwrap();
        let b = Bubble::new(vec![0.3, -1.0, 2.0], 1.7).unwrap();
        let sup = NormSupport {
            cores: vec![b.clone()],
            radial: false,
            decay: 4.0,
        };
        let v = neg_sobolev_norm(|x| bubble_eval(&a, &b, x).powf(a.p()), &a, &sup, &QuadratureSpec::default()).unwrap();
        let e = a.energy();
        assert!(((v.squared - e) / e).abs() < 0.01, "{} ± {} vs {e}", v.squared, v.std_error);
        assert!((v.squared - e).abs() < 5.0 * v.std_error + 1e-3 * e);
    }

    #[test]
    fn zero_function() {
        let a = Ambient::new(3, 0.5).unwrap();
        let sup = NormSupport {
            cores: vec![Bubble::at_origin(3, 1.0)],
            radial: true,
            decay: 4.0,
        };
        assert_eq!(neg_sobolev_norm(|_| 0.0, &a, &sup, &QuadratureSpec::default()).unwrap().value, 0.0);
    }
}
