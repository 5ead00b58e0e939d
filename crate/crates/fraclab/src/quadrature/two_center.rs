//! Integrals over R^n of functions built from two centers, reduced to (r, θ)
//! about z1 with axis toward z2. Directional dependence on the sphere S^(n-2)
//! orthogonal to the axis is averaged with the cross-polytope design ±f_j,
//! exact for polynomials of degree ≤ 3 in the transverse direction.

use super::gk::{self, Tol};
use super::radial::integrate_radial_tol;
use super::{sphere_area, QuadratureSpec};
use crate::bubbles::Bubble;
use crate::error::{Error, Result};
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoCenterGeometry {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    /// Core widths (1/λ) around each center.
    pub w1: f64,
    pub w2: f64,
    /// Indicator spheres (center index 0 or 1, radius) where the integrand jumps.
    pub spheres: Vec<(usize, f64)>,
    /// Power decay of the integrand at infinity (> n).
    pub decay: f64,
}

impl TwoCenterGeometry {
    pub fn from_bubbles(b1: &Bubble, b2: &Bubble, decay: f64) -> Self {
        Self {
            z1: b1.z.clone(),
            z2: b2.z.clone(),
            w1: 1.0 / b1.lambda,
            w2: 1.0 / b2.lambda,
            spheres: Vec::new(),
            decay,
        }
    }
}

fn orthonormal_complement(e: &[f64]) -> Vec<Vec<f64>> {
    let n = e.len();
    let mut basis: Vec<Vec<f64>> = vec![e.to_vec()];
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// ∫ g(x) dx over R^n for an integrand whose structure is set by two centers.
pub fn integrate_two_center_geo<G: Fn(&[f64]) -> f64>(g: G, geo: &TwoCenterGeometry, spec: &QuadratureSpec) -> Result<f64> {
    let n = geo.z1.len();
    if n == 0 || geo.z2.len() != n {
        return Err(Error::Domain("center dimensions differ".into()));
    }
    if !(geo.decay > n as f64) {
        return Err(Error::Domain(format!("decay {} must exceed n = {n}", geo.decay)));
    }
    let nf = n as u32;
    let diff: Vec<f64> = geo.z2.iter().zip(&geo.z1).map(|(a, b)| a - b).collect();
    let d = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = geo.w1.max(geo.w2);
    let outer_tol = spec.tol().l1();
    let inner_tol = Tol::new(0.0, (0.1 * spec.rel_tol).max(1e-13), spec.max_refinements).l1();
    let mut x = vec![0.0; n];

    if d < 1e-12 * scale {
        // Coincident centers: radial integral with the ±e_k design on S^(n-1).
        let mut bps = vec![geo.w1, geo.w2];
        bps.extend(geo.spheres.iter().map(|s| s.1));
        let f = |r: f64| {
            let mut x = geo.z1.clone();
            let mut acc = 0.0;
            for k in 0..n {
                for sgn in [-1.0, 1.0] {
                    x[k] = geo.z1[k] + sgn * r;
                    acc += g(&x);
                }
                x[k] = geo.z1[k];
            }
            acc / (2 * n) as f64
        };
        return integrate_radial_tol(f, nf, geo.decay, &bps, outer_tol);
    }

    let e: Vec<f64> = diff.iter().map(|v| v / d).collect();
    let perp = orthonormal_complement(&e);
    let transverse_area = if n >= 2 { sphere_area(nf - 1) } else { 1.0 };

    let lo = geo.w1.min(geo.w2).min(d) * 1e-3;
    let hi = (d + scale) * 1e6;
    let mut rp = gk::geometric(lo, hi, 2.0);
    rp.push(geo.w1);
    rp.push(d);
    let mut w = geo.w2;
    while w < d {
        rp.push(d - w);
        rp.push(d + w);
        w *= 2.0;
    }
    for &(idx, rho) in &geo.spheres {
        if idx == 0 {
            rp.push(rho);
        } else {
            rp.push(d + rho);
            rp.push((d - rho).abs());
        }
    }
    let rpts = gk::panel_points(0.0, hi, rp);

    let mut failure: Option<Error> = None;
    let mut inner = |r: f64| -> f64 {
        if n == 1 {
            x[0] = geo.z1[0] + r * e[0];
            let a = g(&x);
            x[0] = geo.z1[0] - r * e[0];
            return a + g(&x);
        }
        let mut tp = Vec::new();
        let tw = (r - d).abs().max(geo.w2) / d;
        let mut t = tw;
        while t < PI {
            tp.push(t);
            t *= 2.0;
        }
        for &(idx, rho) in &geo.spheres {
            if idx == 1 {
                let c = (r * r + d * d - rho * rho) / (2.0 * r * d);
                if c > -1.0 && c < 1.0 {
                    tp.push(c.acos());
                }
            }
        }
        let tpts = gk::panel_points(0.0, PI, tp);
        let pw = n as i32 - 2;
        let res = gk::integrate_panels(
            |th: f64| {
                let (st, ct) = th.sin_cos();
                let mut acc = 0.0;
                let mut xx = vec![0.0; n];
                for f in &perp {
                    for sgn in [-1.0, 1.0] {
                        for k in 0..n {
                            xx[k] = geo.z1[k] + r * (ct * e[k] + sgn * st * f[k]);
                        }
                        acc += g(&xx);
                    }
                }
                acc / (2 * perp.len()) as f64 * st.powi(pw)
            },
            &tpts,
            inner_tol,
        );
        match res {
            Ok(v) => transverse_area * v.value,
            Err(err) => {
                failure.get_or_insert(err);
                f64::NAN
            }
        }
    };
    let pw = n as i32 - 1;
    let est = gk::integrate_panels(|r| inner(r) * r.powi(pw), &rpts, outer_tol);
    let tail_h = inner(hi) * hi.powi(pw);
    if let Some(err) = failure {
        return Err(err);
    }
    let est = est?;
    Ok(est.value + tail_h * hi / (geo.decay - n as f64))
}

/// ∫ g over R^n with geometry read from two bubbles; integrand decay 2n assumed.
pub fn integrate_two_center<G: Fn(&[f64]) -> f64>(g: G, b1: &Bubble, b2: &Bubble, spec: &QuadratureSpec) -> Result<f64> {
    let n = b1.z.len() as f64;
    integrate_two_center_geo(g, &TwoCenterGeometry::from_bubbles(b1, b2, 2.0 * n), spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_pair_product() {
        // ∫ exp(-|x|^2 - |x-a|^2) dx = (π/2)^(n/2) exp(-|a|^2/2); fast decay, tail negligible
        for n in 1..=4usize {
            let mut z2 = vec![0.0; n];
            z2[0] = 1.5;
            let geo = TwoCenterGeometry {
                z1: vec![0.0; n],
                z2: z2.clone(),
                w1: 1.0,
                w2: 1.0,
                spheres: vec![],
                decay: 50.0,
            };
            let v = integrate_two_center_geo(
                |x| {
                    let a: f64 = x.iter().map(|t| t * t).sum();
                    let b: f64 = x.iter().zip(&z2).map(|(t, z)| (t - z) * (t - z)).sum();
                    (-a - b).exp()
                },
                &geo,
                &QuadratureSpec::default(),
            )
            .unwrap();
            let e = (PI / 2.0).powf(n as f64 / 2.0) * (-1.125f64).exp();
            assert!(((v - e) / e).abs() < 1e-9, "n = {n}: {v} vs {e}");
        }
    }

    #[test]
    fn directional_quadratic_factor_is_exact() {
        // ∫ x_2^2 exp(-|x|^2) in R^3 with a far second center: π^{3/2}/2
        let geo = TwoCenterGeometry {
            z1: vec![0.0; 3],
            z2: vec![0.0, 0.0, 4.0],
            w1: 1.0,
            w2: 1.0,
            spheres: vec![],
            decay: 50.0,
        };
        let v = integrate_two_center_geo(
            |x| x[1] * x[1] * (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(),
            &geo,
            &QuadratureSpec::default(),
        )
        .unwrap();
        let e = PI.powf(1.5) / 2.0;
        assert!(((v - e) / e).abs() < 1e-9);
    }

    #[test]
    fn sphere_indicator_volume() {
        // volume of the lens B(0,1) ∩ B(a,1) in R^3, |a| = 1: 5π/12
        let z2 = vec![1.0, 0.0, 0.0];
        let geo = TwoCenterGeometry {
            z1: vec![0.0; 3],
            z2: z2.clone(),
            w1: 1.0,
            w2: 1.0,
            spheres: vec![(0, 1.0), (1, 1.0)],
            decay: 50.0,
        };
        let v = integrate_two_center_geo(
            |x| {
                let a: f64 = x.iter().map(|t| t * t).sum();
                let b: f64 = x.iter().zip(&z2).map(|(t, z)| (t - z) * (t - z)).sum();
                if a <= 1.0 && b <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            },
            &geo,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((v - 5.0 * PI / 12.0).abs() < 1e-8);
    }
}
