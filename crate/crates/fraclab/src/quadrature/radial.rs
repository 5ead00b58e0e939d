use super::gk::{self, Tol};
use super::{sphere_area, QuadratureSpec};
use crate::error::{Error, Result};

/// Panel points for a radial integral with natural length scales `scales`:
/// 0, geometric points from 1e-3·min to 1e6·max, and the scales themselves.
pub(crate) fn radial_points(scales: &[f64]) -> (Vec<f64>, f64) {
    let pos: Vec<f64> = scales.iter().copied().filter(|x| *x > 0.0 && x.is_finite()).collect();
    let lo = pos.iter().copied().fold(1.0f64, f64::min) * 1e-3;
    let hi = pos.iter().copied().fold(1.0f64, f64::max) * 1e6;
    let mut pts = gk::geometric(lo, hi, 2.0);
    pts.extend(pos.iter().copied());
    (gk::panel_points(0.0, hi, pts), hi)
}

/// ∫_{R^n} f(|x|) dx = ω_{n-1} ∫_0^∞ f(r) r^(n-1) dr, with f(r) ~ r^(-decay) beyond
/// the last panel (decay > n) integrated analytically.
pub fn integrate_radial<F: Fn(f64) -> f64>(f: F, n: u32, decay: f64, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    if !(decay > n as f64) {
        return Err(Error::Domain(format!("decay {decay} must exceed n = {n} for integrability")));
    }
    let (pts, hi) = radial_points(breakpoints);
    let pw = n as i32 - 1;
    let est = gk::integrate_panels(|r| f(r) * r.powi(pw), &pts, spec.tol().l1())?;
    let tail = f(hi) * hi.powi(n as i32) / (decay - n as f64);
    Ok(sphere_area(n) * (est.value + tail))
}

/// Same as [`integrate_radial`] with an explicit tolerance; used by nested callers.
pub(crate) fn integrate_radial_tol<F: FnMut(f64) -> f64>(mut f: F, n: u32, decay: f64, breakpoints: &[f64], tol: Tol) -> Result<f64> {
    let (pts, hi) = radial_points(breakpoints);
    let pw = n as i32 - 1;
    let est = gk::integrate_panels(|r| f(r) * r.powi(pw), &pts, tol)?;
    let tail = f(hi) * hi.powi(n as i32) / (decay - n as f64);
    Ok(sphere_area(n) * (est.value + tail))
}
