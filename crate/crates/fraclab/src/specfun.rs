//! Gamma-family functions and the Gauss hypergeometric function on the real line.
//!
//! `gamma` uses the Lanczos approximation (g = 7, nine terms) with reflection
//! for x < 1/2. `hyp2f1` sums the power series for |z| <= 1/2, maps z < -1/2
//! through the Pfaff transformation z -> z/(z-1), and evaluates arguments in
//! (1/2, 1) through the connection formula at z = 1, including the logarithmic
//! cases where c - a - b is an integer.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest argument with a finite f64 gamma value.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

const SERIES_EPS: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 100_000;
const INTEGER_SNAP: f64 = 1e-12;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

fn near_integer(x: f64) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= INTEGER_SNAP * (1.0 + r.abs()) {
        Some(r as i64)
    } else {
        None
    }
}

/// sin(pi x) with exact zeros at the integers.
pub fn sinpi(x: f64) -> f64 {
    let mut r = x % 2.0;
    if r > 1.0 {
        r -= 2.0;
    } else if r < -1.0 {
        r += 2.0;
    }
    if r > 0.5 {
        r = 1.0 - r;
    } else if r < -0.5 {
        r = -1.0 - r;
    }
    (PI * r).sin()
}

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (Gamma(x + 1)).
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Gamma function. Errors at the poles and above [`GAMMA_MAX_ARG`].
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("gamma of non-finite argument {x}")));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::Overflow(x));
    }
    if x < 0.5 {
        let s = sinpi(x);
        let g = if 1.0 - x > GAMMA_MAX_ARG {
            // Gamma(1 - x) overflows; the reflected value underflows.
            let lg = lgamma_positive(1.0 - x);
            return Ok(s.signum() * (PI.ln() - s.abs().ln() - lg).exp());
        } else {
            gamma(1.0 - x)?
        };
        return Ok(PI / (s * g));
    }
    if x == x.round() && x <= 23.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return Ok(f);
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    let half = t.powf(0.5 * (y + 0.5));
    Ok((2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(y))
}

fn lgamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        // only reached for small positive x
        return (PI / (sinpi(x) * gamma(1.0 - x).unwrap_or(f64::INFINITY))).abs().ln();
    }
    if x > 20.0 {
        // Stirling series
        let x2 = x * x;
        let corr = 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2) + 1.0 / (1260.0 * x2 * x2 * x) - 1.0 / (1680.0 * x2 * x2 * x2 * x);
        return (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + corr;
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (y + 0.5) * t.ln() - t + lanczos_sum(y).ln()
}

/// ln |Gamma(x)|.
pub fn lgamma(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("lgamma of non-finite argument {x}")));
    }
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x >= 0.5 {
        Ok(lgamma_positive(x))
    } else {
        Ok(PI.ln() - sinpi(x).abs().ln() - lgamma_positive(1.0 - x))
    }
}

/// Sign of Gamma(x): +1 or -1. Errors at the poles.
pub fn gamma_sign(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x > 0.0 {
        Ok(1.0)
    } else {
        // Gamma alternates sign on (-k-1, -k)
        let k = (-x).floor() as i64;
        Ok(if k % 2 == 0 { -1.0 } else { 1.0 })
    }
}

/// 1/Gamma(x), which is zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x.abs() < GAMMA_MAX_ARG - 1.0 {
        if let Ok(g) = gamma(x) {
            return 1.0 / g;
        }
    }
    match (lgamma(x), gamma_sign(x)) {
        (Ok(l), Ok(s)) => s * (-l).exp(),
        _ => 0.0,
    }
}

/// Beta function B(a, b) = Gamma(a)Gamma(b)/Gamma(a+b).
pub fn beta(a: f64, b: f64) -> Result<f64> {
    if a > 0.0 && b > 0.0 {
        if a + b < GAMMA_MAX_ARG {
            return Ok(gamma(a)? * gamma(b)? / gamma(a + b)?);
        }
        return Ok((lgamma(a)? + lgamma(b)? - lgamma(a + b)?).exp());
    }
    let sign = gamma_sign(a)? * gamma_sign(b)? * gamma_sign(a + b).unwrap_or(1.0);
    if is_nonpositive_integer(a + b) {
        return Ok(0.0);
    }
    Ok(sign * (lgamma(a)? + lgamma(b)? - lgamma(a + b)?).exp())
}

/// Digamma function psi(x) = Gamma'(x)/Gamma(x).
pub fn digamma(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(x));
    }
    if x < 0.5 {
        return Ok(digamma(1.0 - x)? - PI / (PI * x).tan());
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let r = 1.0 / (y * y);
    let tail = r * (1.0 / 12.0 - r * (1.0 / 120.0 - r * (1.0 / 252.0 - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * 691.0 / 32760.0)))));
    Ok(acc + y.ln() - 0.5 / y - tail)
}

/// Parameters of 2F1(a, b; c; z) on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub z: f64,
}

impl HypParams {
    pub fn new(a: f64, b: f64, c: f64, z: f64) -> Self {
        Self { a, b, c, z }
    }
}

/// Gauss hypergeometric function for real z < 1.
pub fn hyp2f1(p: HypParams) -> Result<f64> {
    hyp2f1_abcz(p.a, p.b, p.c, p.z)
}

/// Convenience form of [`hyp2f1`].
pub fn hyp2f1_abcz(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
        return Err(Error::Domain("non-finite hypergeometric parameter".into()));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Domain(format!("c = {c} is a non-positive integer")));
    }
    if z >= 1.0 {
        return Err(Error::Domain(format!("z = {z} outside (-inf, 1)")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    // 2F1 is symmetric in (a, b); a fixed order makes the evaluation symmetric too.
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    if z.abs() <= 0.5 {
        return series(a, b, c, z);
    }
    if z < -0.5 {
        return pfaff(a, b, c, z);
    }
    unit_interval(a, b, c, z, 1.0 - z)
}

/// Plain power series; valid for |z| < 1, used for |z| <= 1/2.
pub(crate) fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() <= SERIES_EPS * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence(format!(
        "2F1({a}, {b}; {c}; {z}) series exceeded {SERIES_MAX_TERMS} terms"
    )))
}

/// Pfaff map for z < 0: 2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1)).
pub(crate) fn pfaff(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let w = z / (z - 1.0);
    // Prefer the variant whose transformed series terminates soonest.
    let (lead, other) = if is_nonpositive_integer(c - a) && (!is_nonpositive_integer(c - b) || c - a > c - b) {
        (b, a)
    } else {
        (a, b)
    };
    // 1 - w = 1/(1 - z) is computed directly to keep its relative precision.
    let f = unit_interval(lead, c - other, c, w, 1.0 / (1.0 - z))?;
    Ok((1.0 - z).powf(-lead) * f)
}

fn polynomial(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 0.0;
    loop {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
        if term == 0.0 {
            return sum;
        }
        sum += term;
        k += 1.0;
    }
}

/// 2F1 for x in [0, 1), with y = 1 - x supplied by the caller.
fn unit_interval(a: f64, b: f64, c: f64, x: f64, y: f64) -> Result<f64> {
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return Ok(polynomial(a, b, c, x));
    }
    if x <= 0.5 {
        return series(a, b, c, x);
    }
    let m = c - a - b;
    match near_integer(m) {
        Some(mi) if mi < 0 => {
            // Euler: 2F1(a,b;c;x) = (1-x)^(c-a-b) 2F1(c-a, c-b; c; x)
            let f = log_case(c - a, c - b, c, (-mi) as usize, y)?;
            Ok(y.powf(m) * f)
        }
        Some(mi) => log_case(a, b, c, mi as usize, y),
        None => {
            let g1 = gamma(c)? * gamma(m)? * rgamma(c - a) * rgamma(c - b);
            let g2 = gamma(c)? * gamma(-m)? * rgamma(a) * rgamma(b);
            let s1 = if g1 != 0.0 { series(a, b, 1.0 - m, y)? } else { 0.0 };
            let s2 = if g2 != 0.0 { series(c - a, c - b, m + 1.0, y)? } else { 0.0 };
            Ok(g1 * s1 + g2 * y.powf(m) * s2)
        }
    }
}

/// Connection formula at z = 1 when c = a + b + m with m a non-negative integer.
/// `y` = 1 - x lies in (0, 1/2].
fn log_case(a: f64, b: f64, c: f64, m: usize, y: f64) -> Result<f64> {
    let mf = m as f64;
    let ln_y = y.ln();
    let gc = gamma(c)?;
    let mut total = 0.0;
    if m > 0 {
        // finite part: Gamma(m)Gamma(c)/(Gamma(a+m)Gamma(b+m)) sum_{k<m} (a)_k (b)_k / (k! (1-m)_k) y^k
        let pre = gamma(mf)? * gc * rgamma(a + mf) * rgamma(b + mf);
        if pre != 0.0 {
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 0..m.saturating_sub(1) {
                let kf = k as f64;
                term *= (a + kf) * (b + kf) / ((kf + 1.0) * (1.0 - mf + kf)) * y;
                sum += term;
            }
            total += pre * sum;
        }
    }
    // logarithmic part
    let pre = gc * rgamma(a) * rgamma(b);
    if pre != 0.0 {
        // (x - 1)^m = (-1)^m y^m
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let mut coef = 1.0 / gamma(mf + 1.0)?; // (a+m)_0 (b+m)_0 / (0! m!)
        let mut sum = 0.0;
        let mut psi_a = digamma(a + mf)?;
        let mut psi_b = digamma(b + mf)?;
        let mut psi_1 = digamma(1.0)?;
        let mut psi_m = digamma(mf + 1.0)?;
        let mut yk = 1.0;
        let mut converged = false;
        for k in 0..SERIES_MAX_TERMS {
            let kf = k as f64;
            let term = coef * yk * (ln_y - psi_1 - psi_m + psi_a + psi_b);
            sum += term;
            if k > 2 && term.abs() <= SERIES_EPS * sum.abs() {
                converged = true;
                break;
            }
            coef *= (a + mf + kf) * (b + mf + kf) / ((kf + 1.0) * (kf + mf + 1.0));
            yk *= y;
            psi_a += 1.0 / (a + mf + kf);
            psi_b += 1.0 / (b + mf + kf);
            psi_1 += 1.0 / (kf + 1.0);
            psi_m += 1.0 / (kf + mf + 1.0);
        }
        if !converged {
            return Err(Error::NonConvergence("2F1 logarithmic connection series did not converge".into()));
        }
        total -= pre * sign * y.powi(m as i32) * sum;
    }
    Ok(total)
}

/// Number of zeros of 2F1(n/2+s, 2s; n/2; -r^2) on r > 0, counted through the
/// transformed function 2F1(-s, 2s; n/2; t) on t in (0, 1).
pub fn hyp2f1_zero_count(n: u32, s: f64) -> Result<u32> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Precondition(format!("s = {s} not in (0, 1)")));
    }
    let nf = n as f64;
    if nf <= 4.0 * s {
        return Err(Error::Precondition(format!("n = {n} must exceed 4s = {}", 4.0 * s)));
    }
    let sign = gamma_sign(-s)? * gamma_sign(2.0 * s)? * gamma_sign(nf / 2.0 + s)? * gamma_sign(nf / 2.0 - 2.0 * s)?;
    let count = s.floor() + 0.5 * (1.0 + sign);
    Ok(count as u32)
}
