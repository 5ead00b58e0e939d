//! Fractional Laplacian of radial functions.
//!
//! Closed form for (1+r^2)^(-rho):
//!   (-Δ)^t (1+r^2)^(-rho) = K 2F1(n/2+t, rho+t; n/2; -r^2),
//!   K = 4^t Γ(rho+t) Γ(n/2+t) / (Γ(rho) Γ(n/2)).
//! The prefactor is checked against the singular integral at r = 0 in the tests.
//!
//! The numeric path evaluates C(n,t) p.v.∫ (f(x) - f(y)) |x-y|^(-n-2t) dy for a
//! radial profile, reducing to a radial integral against an angular kernel.

use crate::bubbles::Ambient;
use crate::error::{Error, Result};
use crate::quadrature::gk::{self, Tol};
use crate::quadrature::sphere_area;
use crate::specfun::{gamma, hyp2f1_abcz};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Operator exponent t of (-Δ)^t, with t in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t < 1.0 {
            Ok(Self(t))
        } else {
            Err(Error::Domain(format!("fractional order {t} not in (0, 1)")))
        }
    }

    pub fn t(self) -> f64 {
        self.0
    }
}

/// A radial function with first and second derivatives and an asserted power
/// decay f(r) ~ r^(-decay_exponent), used for the far-field tail.
#[derive(Clone)]
pub struct RadialProfile {
    value: Scalar,
    d1: Scalar,
    d2: Scalar,
    pub decay_exponent: f64,
    /// Radii where the profile is only Lipschitz; quadrature panels split there.
    pub breakpoints: Vec<f64>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("decay_exponent", &self.decay_exponent)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl RadialProfile {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
        decay_exponent: f64,
    ) -> Result<Self> {
        if !(decay_exponent >= 0.0) {
            return Err(Error::Domain(format!("decay exponent {decay_exponent} must be >= 0")));
        }
        Ok(Self {
            value: Arc::new(value),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            decay_exponent,
            breakpoints: Vec::new(),
        })
    }

    pub fn with_breakpoints(mut self, b: Vec<f64>) -> Self {
        self.breakpoints = b;
        self
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.value)(r)
    }
    pub fn d1(&self, r: f64) -> f64 {
        (self.d1)(r)
    }
    pub fn d2(&self, r: f64) -> f64 {
        (self.d2)(r)
    }

    /// (1 + r^2)^(-rho).
    pub fn inverse_quadratic(rho: f64) -> Self {
        Self {
            value: Arc::new(move |r| (1.0 + r * r).powf(-rho)),
            d1: Arc::new(move |r| -2.0 * rho * r * (1.0 + r * r).powf(-rho - 1.0)),
            d2: Arc::new(move |r| {
                let q = 1.0 + r * r;
                -2.0 * rho * q.powf(-rho - 1.0) + 4.0 * rho * (rho + 1.0) * r * r * q.powf(-rho - 2.0)
            }),
            decay_exponent: 2.0 * rho,
            breakpoints: Vec::new(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            value: Arc::new(move |_| c),
            d1: Arc::new(|_| 0.0),
            d2: Arc::new(|_| 0.0),
            decay_exponent: 0.0,
            breakpoints: Vec::new(),
        }
    }

    /// r ↦ f(lambda r).
    pub fn rescaled(&self, lambda: f64) -> Self {
        let (v, a, b) = (self.value.clone(), self.d1.clone(), self.d2.clone());
        Self {
            value: Arc::new(move |r| v(lambda * r)),
            d1: Arc::new(move |r| lambda * a(lambda * r)),
            d2: Arc::new(move |r| lambda * lambda * b(lambda * r)),
            decay_exponent: self.decay_exponent,
            breakpoints: self.breakpoints.iter().map(|x| x / lambda).collect(),
        }
    }

    /// Finite-difference spot check of d1 and d2 at the given radii.
    pub fn check_consistency(&self, radii: &[f64], tol: f64) -> Result<()> {
        for &r in radii {
            let h = 1e-4 * r.max(1e-2);
            let fd1 = (self.value(r + h) - self.value(r - h)) / (2.0 * h);
            let fd2 = (self.value(r + h) - 2.0 * self.value(r) + self.value(r - h)) / (h * h);
            let scale = |x: f64, y: f64| (x - y).abs() / (1.0 + y.abs());
            if scale(fd1, self.d1(r)) > tol || scale(fd2, self.d2(r)) > tol.sqrt() {
                return Err(Error::Domain(format!("profile derivatives inconsistent at r = {r}")));
            }
        }
        Ok(())
    }
}

/// Prefactor K of the inverse-quadratic closed form, i.e. (-Δ)^t (1+r^2)^(-rho) at r = 0.
pub fn inverse_quadratic_prefactor(n: u32, t: FracOrder, rho: f64) -> Result<f64> {
    let t = t.t();
    let h = n as f64 / 2.0;
    Ok(4f64.powf(t) * gamma(rho + t)? * gamma(h + t)? / (gamma(rho)? * gamma(h)?))
}

/// (-Δ)^t applied to x ↦ (1+|x|^2)^(-rho), evaluated at |x| = r.
pub fn fraclap_inverse_quadratic(n: u32, t: FracOrder, rho: f64, r: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    if !(rho > 0.0) || !(r >= 0.0) {
        return Err(Error::Domain(format!("need rho > 0 and r >= 0 (rho = {rho}, r = {r})")));
    }
    let k = inverse_quadratic_prefactor(n, t, rho)?;
    let h = n as f64 / 2.0;
    Ok(k * hyp2f1_abcz(h + t.t(), rho + t.t(), h, -r * r)?)
}

/// Normalization C(n,t) = 4^t Γ(n/2+t) / (π^(n/2) |Γ(-t)|) of the singular integral.
pub fn singular_integral_constant(n: u32, t: FracOrder) -> Result<f64> {
    let t = t.t();
    let h = n as f64 / 2.0;
    Ok(4f64.powf(t) * gamma(h + t)? / (PI.powf(h) * gamma(-t)?.abs()))
}

/// ω_{n-2} ∫ D^(-e) sin^(n-2)θ dθ over {θ : D ≥ h^2}, D = |r e - rho ω|^2.
/// This is the integral of |x-y|^(-2e) over the sphere |y| = rho with the ball
/// |x - y| < h removed. For n = 1 the sphere is the two points ±rho.
pub(crate) fn angular_kernel(n: u32, r: f64, rho: f64, e: f64, h: f64, tol: Tol) -> Result<f64> {
    let diff = (r - rho).abs();
    if n == 1 {
        let mut k = (r + rho).powf(-2.0 * e);
        if diff >= h {
            k += diff.powf(-2.0 * e);
        }
        return Ok(k);
    }
    if r == 0.0 || rho == 0.0 {
        return Ok(if diff >= h { sphere_area(n) * diff.powf(-2.0 * e) } else { 0.0 });
    }
    let four = 4.0 * r * rho;
    let theta0 = if diff >= h {
        0.0
    } else {
        let arg = ((h * h - diff * diff) / four).sqrt();
        if arg >= 1.0 {
            return Ok(0.0);
        }
        2.0 * arg.asin()
    };
    let width = diff.max(h) / (r * rho).sqrt();
    let mut pts = vec![theta0];
    let mut w = width;
    while theta0 + w < PI {
        pts.push(theta0 + w);
        w *= 2.0;
    }
    pts.push(PI);
    let pw = n as i32 - 2;
    let est = gk::integrate_panels(
        |th: f64| {
            let sh = (0.5 * th).sin();
            let d = diff * diff + four * sh * sh;
            d.powf(-e) * th.sin().powi(pw)
        },
        &pts,
        tol,
    )?;
    Ok(sphere_area(n - 1) * est.value)
}

/// Numeric (-Δ)^t f at radius r for a radial profile f in R^n.
pub fn fraclap_radial_numeric(profile: &RadialProfile, n: u32, t: FracOrder, r: f64) -> Result<f64> {
    if n == 0 || !(r >= 0.0) {
        return Err(Error::Domain(format!("need n >= 1 and r >= 0 (n = {n}, r = {r})")));
    }
    let tt = t.t();
    let nf = n as f64;
    let e = 0.5 * (nf + 2.0 * tt);
    let omega = sphere_area(n);
    let c = singular_integral_constant(n, t)?;
    let f = |x: f64| profile.value(x);
    let fr = f(r);
    let inner_tol = Tol::new(0.0, 1e-11, 600);
    let outer_tol = Tol::new(1e-11 * fr.abs().max(1e-300), 1e-9, 4000);
    // the far tail assumes the asserted power decay, so start it past every breakpoint
    let bp_max = profile.breakpoints.iter().copied().fold(0.0, f64::max);
    let rho_max = 1e3f64.max(1e3 * r).max(1e3 * bp_max);
    let d = profile.decay_exponent;

    let tail_corr = e * (2.0 * (e + 1.0) / nf - 1.0);
    let tail = omega
        * (fr * (rho_max.powf(-2.0 * tt) / (2.0 * tt) + tail_corr * r * r * rho_max.powf(-2.0 * tt - 2.0) / (2.0 * tt + 2.0))
            - f(rho_max) * rho_max.powf(-2.0 * tt) / (2.0 * tt + d));

    if r == 0.0 {
        let h = 1e-4f64;
        // ball window: Δf(0) = n f''(0)
        let inner = -0.5 * profile.d2(0.0) * omega * h.powf(2.0 - 2.0 * tt) / (2.0 - 2.0 * tt);
        let mut pts = gk::geometric(h, rho_max, 2.0);
        pts.extend(profile.breakpoints.iter().copied());
        let pts = gk::panel_points(h, rho_max, pts);
        let outer = gk::integrate_panels(|rho| (fr - f(rho)) * omega * rho.powf(-1.0 - 2.0 * tt), &pts, outer_tol)?;
        return Ok(c * (inner + outer.value + tail));
    }

    let h = 1e-4f64.max(1e-3 * r).min(0.5 * r);
    let lap = profile.d2(r) + (nf - 1.0) * profile.d1(r) / r;
    if !lap.is_finite() {
        return Err(Error::NonConvergence(format!("singularity window: Δf not finite at r = {r}")));
    }
    let inner = -0.5 * lap * omega * h.powf(2.0 - 2.0 * tt) / (nf * (2.0 - 2.0 * tt));

    let g = |rho: f64| -> f64 {
        let diffv = fr - f(rho);
        if diffv == 0.0 {
            return 0.0;
        }
        match angular_kernel(n, r, rho, e, h, inner_tol) {
            Ok(k) => diffv * rho.powi(n as i32 - 1) * k,
            Err(_) => f64::NAN,
        }
    };

    // Symmetric fold about rho = r removes the odd first-order term.
    let half = 0.5 * r;
    let mut fold_pts = vec![0.0];
    fold_pts.extend(gk::geometric(h, half, 2.0));
    fold_pts.extend(profile.breakpoints.iter().map(|b| (b - r).abs()));
    let fold_pts = gk::panel_points(0.0, half, fold_pts);
    let fold = gk::integrate_panels(|dl| g(r + dl) + g(r - dl), &fold_pts, outer_tol)?;

    let left_pts = gk::panel_points(0.0, half, profile.breakpoints.iter().copied().chain([0.25 * r]));
    let left = gk::integrate_panels(g, &left_pts, outer_tol)?;

    let mut right_pts = gk::geometric(1.5 * r, rho_max, 2.0);
    right_pts.extend(profile.breakpoints.iter().copied());
    let right_pts = gk::panel_points(1.5 * r, rho_max, right_pts);
    let right = gk::integrate_panels(g, &right_pts, outer_tol)?;

    let total = inner + fold.value + left.value + right.value + tail;
    if !total.is_finite() {
        return Err(Error::NonConvergence(format!("angular kernel failed at r = {r}")));
    }
    Ok(c * total)
}

/// r = 0 followed by 49 log-spaced radii in [1e-3, 10].
pub fn default_r_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    for k in 0..49 {
        g.push(10f64.powf(-3.0 + 4.0 * k as f64 / 48.0));
    }
    g
}

/// max over the grid of |(-Δ)^s U - U^p| / U^p for the unit bubble.
pub fn check_bubble_pde(n: u32, s: f64, r_grid: &[f64]) -> Result<f64> {
    let amb = Ambient::new(n, s)?;
    let t = FracOrder::new(s)?;
    let (c, m, p) = (amb.c(), amb.m(), amb.p());
    let mut worst = 0.0f64;
    for &r in r_grid {
        let lhs = c * fraclap_inverse_quadratic(n, t, m, r)?;
        let rhs = (c * (1.0 + r * r).powf(-m)).powf(p);
        worst = worst.max(((lhs - rhs) / rhs).abs());
    }
    Ok(worst)
}

/// Residual of (-Δ)^s ∂_λU = p U^(p-1) ∂_λU at λ = 1, normalized by the envelope
/// p U^(p-1) m c (1+r^2)^(-m) since ∂_λU vanishes at r = 1.
pub fn check_eigen_relation_dilation(n: u32, s: f64, r_grid: &[f64]) -> Result<f64> {
    let amb = Ambient::new(n, s)?;
    let t = FracOrder::new(s)?;
    let (c, m, p) = (amb.c(), amb.m(), amb.p());
    let mut worst = 0.0f64;
    for &r in r_grid {
        let q = 1.0 + r * r;
        // ∂_λU|_{λ=1} = m c [2 (1+r^2)^(-m-1) - (1+r^2)^(-m)]
        let lhs = m * c * (2.0 * fraclap_inverse_quadratic(n, t, m + 1.0, r)? - fraclap_inverse_quadratic(n, t, m, r)?);
        let u = c * q.powf(-m);
        let dlu = m * c * (1.0 - r * r) * q.powf(-m - 1.0);
        let rhs = p * u.powf(p - 1.0) * dlu;
        let envelope = p * u.powf(p - 1.0) * m * c * q.powf(-m);
        worst = worst.max(((lhs - rhs) / envelope).abs());
    }
    Ok(worst)
}

/// min over the grid of (-Δ)^s (1+r^2)^(-s) · (1+r^2)^(2s).
pub fn empirical_alpha(n: u32, s: f64, r_grid: &[f64]) -> Result<f64> {
    let t = FracOrder::new(s)?;
    let mut lo = f64::INFINITY;
    for &r in r_grid {
        let v = fraclap_inverse_quadratic(n, t, s, r)? * (1.0 + r * r).powf(2.0 * s);
        lo = lo.min(v);
    }
    Ok(lo)
}
