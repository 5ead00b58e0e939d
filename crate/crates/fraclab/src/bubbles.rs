//! Bubbles U[z,λ](x) = c (λ / (1 + λ²|x-z|²))^((n-2s)/2), their derivative
//! modes, and pairwise interaction quantities.

use crate::error::{Error, Result};
use crate::fraclap::{fraclap_inverse_quadratic, FracOrder};
use crate::quadrature::sphere_area;
use crate::specfun::beta;
use serde::{Deserialize, Serialize};

/// Dimension n and order s with n > 2s, s in (0, 1). The bubble constant c is
/// fixed once here from (-Δ)^s U = U^p at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AmbientDoc", into = "AmbientDoc")]
pub struct Ambient {
    n: u32,
    s: f64,
    c: f64,
    c_pm1: f64,
}

#[derive(Serialize, Deserialize)]
struct AmbientDoc {
    n: u32,
    s: f64,
}

impl TryFrom<AmbientDoc> for Ambient {
    type Error = Error;
    fn try_from(d: AmbientDoc) -> Result<Self> {
        Ambient::new(d.n, d.s)
    }
}

impl From<Ambient> for AmbientDoc {
    fn from(a: Ambient) -> Self {
        AmbientDoc { n: a.n, s: a.s }
    }
}

impl Ambient {
    pub fn new(n: u32, s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("s = {s} not in (0, 1)")));
        }
        if !(n as f64 > 2.0 * s) {
            return Err(Error::Domain(format!("need n > 2s (n = {n}, s = {s})")));
        }
        let m = (n as f64 - 2.0 * s) / 2.0;
        let p = (n as f64 + 2.0 * s) / (n as f64 - 2.0 * s);
        // (-Δ)^s (c (1+r²)^-m) = c K (1+r²)^(-m p), so c^(p-1) = K.
        let c_pm1 = fraclap_inverse_quadratic(n, FracOrder::new(s)?, m, 0.0)?;
        let c = c_pm1.powf(1.0 / (p - 1.0));
        Ok(Self { n, s, c, c_pm1 })
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn s(&self) -> f64 {
        self.s
    }
    /// (n - 2s)/2, the decay half-exponent of a bubble.
    pub fn m(&self) -> f64 {
        (self.n as f64 - 2.0 * self.s) / 2.0
    }
    pub fn p(&self) -> f64 {
        (self.n as f64 + 2.0 * self.s) / (self.n as f64 - 2.0 * self.s)
    }
    pub fn two_star(&self) -> f64 {
        2.0 * self.n as f64 / (self.n as f64 - 2.0 * self.s)
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    /// c^(p-1).
    pub fn c_pow_pm1(&self) -> f64 {
        self.c_pm1
    }
    pub fn order(&self) -> FracOrder {
        FracOrder::new(self.s).expect("validated in new")
    }

    /// S^(n/s) = ∫ U^(2*) = c^(2*) ω_{n-1} B(n/2, n/2) / 2.
    pub fn energy(&self) -> f64 {
        let h = self.n as f64 / 2.0;
        self.c.powf(self.two_star()) * sphere_area(self.n) * 0.5 * beta(h, h).expect("positive arguments")
    }

    /// The sharp constant S.
    pub fn sharp_constant(&self) -> f64 {
        self.energy().powf(self.s / self.n as f64)
    }

    /// U[0,λ] at radius r.
    pub fn bubble_radial(&self, lambda: f64, r: f64) -> f64 {
        self.c * (lambda / (1.0 + lambda * lambda * r * r)).powf(self.m())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub z: Vec<f64>,
    pub lambda: f64,
}

impl Bubble {
    pub fn new(z: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("bubble scale {lambda} must be positive")));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("bubble center must be finite".into()));
        }
        Ok(Self { z, lambda })
    }

    pub fn at_origin(n: u32, lambda: f64) -> Self {
        Self {
            z: vec![0.0; n as usize],
            lambda,
        }
    }

    pub fn dist2(&self, x: &[f64]) -> f64 {
        self.z.iter().zip(x).map(|(a, b)| (b - a) * (b - a)).sum()
    }

    pub fn center_dist(&self, other: &Bubble) -> f64 {
        self.dist2(&other.z).sqrt()
    }
}

/// Ordered bubbles with optional coefficients α_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyDoc", into = "FamilyDoc")]
pub struct BubbleFamily {
    pub ambient: Ambient,
    pub bubbles: Vec<Bubble>,
    pub alphas: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct FamilyDoc {
    n: u32,
    s: f64,
    bubbles: Vec<Bubble>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alphas: Option<Vec<f64>>,
}

impl TryFrom<FamilyDoc> for BubbleFamily {
    type Error = Error;
    fn try_from(d: FamilyDoc) -> Result<Self> {
        let amb = Ambient::new(d.n, d.s)?;
        let bubbles = d
            .bubbles
            .into_iter()
            .map(|b| Bubble::new(b.z, b.lambda))
            .collect::<Result<Vec<_>>>()?;
        BubbleFamily::new(amb, bubbles, d.alphas)
    }
}

impl From<BubbleFamily> for FamilyDoc {
    fn from(f: BubbleFamily) -> Self {
        FamilyDoc {
            n: f.ambient.n(),
            s: f.ambient.s(),
            bubbles: f.bubbles,
            alphas: f.alphas,
        }
    }
}

impl BubbleFamily {
    pub fn new(ambient: Ambient, bubbles: Vec<Bubble>, alphas: Option<Vec<f64>>) -> Result<Self> {
        if bubbles.is_empty() {
            return Err(Error::Domain("bubble family must be non-empty".into()));
        }
        if let Some(a) = &alphas {
            if a.len() != bubbles.len() {
                return Err(Error::Domain(format!("{} alphas for {} bubbles", a.len(), bubbles.len())));
            }
        }
        let n = ambient.n() as usize;
        if bubbles.iter().any(|b| b.z.len() != n) {
            return Err(Error::Domain(format!("bubble centers must have dimension {n}")));
        }
        Ok(Self { ambient, bubbles, alphas })
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    pub fn alpha(&self, i: usize) -> f64 {
        self.alphas.as_ref().map_or(1.0, |a| a[i])
    }

    /// σ(x) = Σ α_i U_i(x).
    pub fn sigma(&self, x: &[f64]) -> f64 {
        self.bubbles
            .iter()
            .enumerate()
            .map(|(i, b)| self.alpha(i) * bubble_eval(&self.ambient, b, x))
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn require_pairs(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::Precondition(format!("need at least two bubbles, got {}", self.len())));
        }
        Ok(())
    }
}

/// Derivative mode Z_i^a: a in 1..=n translation, a = n+1 dilation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZMode {
    pub bubble_index: usize,
    pub a: usize,
}

impl ZMode {
    pub fn new(bubble_index: usize, a: usize, n: u32) -> Result<Self> {
        if a == 0 || a > n as usize + 1 {
            return Err(Error::Domain(format!("mode index {a} not in 1..={}", n + 1)));
        }
        Ok(Self { bubble_index, a })
    }
}

pub fn bubble_eval(amb: &Ambient, b: &Bubble, x: &[f64]) -> f64 {
    let l = b.lambda;
    amb.c() * (l / (1.0 + l * l * b.dist2(x))).powf(amb.m())
}

/// Z^a of bubble b at x (a in 1..=n+1, one-based).
pub fn z_mode_value(amb: &Ambient, b: &Bubble, a: usize, x: &[f64]) -> f64 {
    let (c, m, l) = (amb.c(), amb.m(), b.lambda);
    let q = 1.0 + l * l * b.dist2(x);
    if a <= amb.n() as usize {
        2.0 * m * c * l.powf(m + 1.0) * (x[a - 1] - b.z[a - 1]) * q.powf(-m - 1.0)
    } else {
        m * c * l.powf(m) * (2.0 - q) * q.powf(-m - 1.0)
    }
}

pub fn z_mode_eval(amb: &Ambient, mode: ZMode, family: &BubbleFamily, x: &[f64]) -> Result<f64> {
    let b = family
        .bubbles
        .get(mode.bubble_index)
        .ok_or_else(|| Error::Domain(format!("bubble index {} out of range", mode.bubble_index)))?;
    ZMode::new(mode.bubble_index, mode.a, amb.n())?;
    Ok(z_mode_value(amb, b, mode.a, x))
}

/// λ_i/λ_j + λ_j/λ_i + λ_iλ_j|z_i-z_j|², the conformal invariant of a pair.
pub fn pair_invariant(bi: &Bubble, bj: &Bubble) -> f64 {
    let (li, lj) = (bi.lambda, bj.lambda);
    li / lj + lj / li + li * lj * bi.dist2(&bj.z)
}

pub fn q_ij(amb: &Ambient, bi: &Bubble, bj: &Bubble) -> f64 {
    pair_invariant(bi, bj).powf(-amb.m())
}

pub fn family_q(family: &BubbleFamily) -> Result<f64> {
    family.require_pairs()?;
    let b = &family.bubbles;
    let mut q = 0.0f64;
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            q = q.max(q_ij(&family.ambient, &b[i], &b[j]));
        }
    }
    Ok(q)
}

/// The ratio form min_{i≠j} min(λ_i/λ_j, λ_j/λ_i, 1/(λ_iλ_j|z_i-z_j|²)); recorded
/// in reports next to the max-of-q form but not used for decisions.
pub fn family_q_min_form(family: &BubbleFamily) -> Result<f64> {
    family.require_pairs()?;
    let b = &family.bubbles;
    let mut q = f64::INFINITY;
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            let (li, lj) = (b[i].lambda, b[j].lambda);
            let d2 = b[i].dist2(&b[j].z);
            let cross = if d2 > 0.0 { 1.0 / (li * lj * d2) } else { f64::INFINITY };
            q = q.min((li / lj).min(lj / li).min(cross));
        }
    }
    Ok(q)
}

fn r_terms(bi: &Bubble, bj: &Bubble) -> (f64, f64) {
    let (li, lj) = (bi.lambda, bj.lambda);
    let ratio = (li / lj).sqrt().max((lj / li).sqrt());
    let dist = (li * lj).sqrt() * bi.center_dist(bj);
    (ratio, dist)
}

pub fn r_ij(bi: &Bubble, bj: &Bubble) -> f64 {
    let (a, b) = r_terms(bi, bj);
    a.max(b)
}

/// Matrix of R_ij (diagonal zero) and R = min_{i≠j} R_ij / 2.
#[allow(non_snake_case)]
pub fn R_ij_and_R(family: &BubbleFamily) -> Result<(Vec<Vec<f64>>, f64)> {
    family.require_pairs()?;
    let b = &family.bubbles;
    let k = b.len();
    let mut mat = vec![vec![0.0; k]; k];
    let mut lo = f64::INFINITY;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                mat[i][j] = r_ij(&b[i], &b[j]);
                lo = lo.min(mat[i][j]);
            }
        }
    }
    Ok((mat, 0.5 * lo))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    Tower,
    Cluster,
}

/// Cluster iff the distance term is the strict maximum in R_ij.
pub fn classify_pair(family: &BubbleFamily, i: usize, j: usize) -> Result<PairKind> {
    family.require_pairs()?;
    let (bi, bj) = (&family.bubbles[i], &family.bubbles[j]);
    let (ratio, dist) = r_terms(bi, bj);
    Ok(if dist > ratio { PairKind::Cluster } else { PairKind::Tower })
}

pub fn is_delta_interacting(family: &BubbleFamily, delta: f64) -> Result<bool> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    if let Some(a) = &family.alphas {
        if a.iter().any(|x| (x - 1.0).abs() > delta) {
            return Ok(false);
        }
    }
    Ok(family_q(family)? <= delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_pair(n: u32, s: f64, d: f64) -> BubbleFamily {
        let amb = Ambient::new(n, s).unwrap();
        let mut z = vec![0.0; n as usize];
        z[0] = d;
        BubbleFamily::new(amb, vec![Bubble::at_origin(n, 1.0), Bubble::new(z, 1.0).unwrap()], None).unwrap()
    }

    #[test]
    fn ambient_constants() {
        let a = Ambient::new(4, 0.5).unwrap();
        assert!((a.c_pow_pm1() - 3.0).abs() < 1e-13);
        assert!((a.p() - 5.0 / 3.0).abs() < 1e-15);
        assert!((a.two_star() - 8.0 / 3.0).abs() < 1e-15);
        assert!(Ambient::new(1, 0.5).is_err());
        assert!(Ambient::new(3, 1.0).is_err());
    }

    #[test]
    fn bubble_values() {
        let a = Ambient::new(3, 0.5).unwrap();
        let b = Bubble::new(vec![1.0, 2.0, 3.0], 2.0).unwrap();
        assert!((bubble_eval(&a, &b, &[1.0, 2.0, 3.0]) - a.c() * 2.0).abs() < 1e-14);
        let u = Bubble::at_origin(3, 1.0);
        assert!((bubble_eval(&a, &u, &[0.0, 1.0, 0.0]) - a.c() * 0.5).abs() < 1e-15);
    }

    #[test]
    fn z_modes_match_finite_differences() {
        let a = Ambient::new(3, 0.75).unwrap();
        let b = Bubble::new(vec![0.2, -0.1, 0.4], 1.7).unwrap();
        let x = [0.2 + 1.0 / 1.7, -0.1, 0.4];
        let h = 1e-5;
        // translation, a = 1
        let mut zp = b.clone();
        zp.z[0] += h;
        let mut zm = b.clone();
        zm.z[0] -= h;
        let fd = (bubble_eval(&a, &zp, &x) - bubble_eval(&a, &zm, &x)) / (2.0 * h) / b.lambda;
        let v = z_mode_value(&a, &b, 1, &x);
        assert!(((v - fd) / v).abs() < 1e-8);
        assert_eq!(z_mode_value(&a, &b, 1, &b.z), 0.0);
        // dilation, a = n+1, at the center
        let lp = Bubble::new(b.z.clone(), b.lambda * (1.0 + h)).unwrap();
        let lm = Bubble::new(b.z.clone(), b.lambda * (1.0 - h)).unwrap();
        let fd = (bubble_eval(&a, &lp, &b.z) - bubble_eval(&a, &lm, &b.z)) / (2.0 * h);
        let v = z_mode_value(&a, &b, 4, &b.z);
        assert!(((v - fd) / v).abs() < 1e-8);
        assert!((v - a.m() * a.c() * b.lambda.powf(a.m())).abs() < 1e-12);
    }

    #[test]
    fn interaction_examples() {
        let f = unit_pair(3, 0.5, 10.0);
        let q = family_q(&f).unwrap();
        assert!((q - 1.0 / 102.0).abs() < 1e-15);
        assert!(is_delta_interacting(&f, 0.1).unwrap());
        assert!(!is_delta_interacting(&f, 0.001).unwrap());
        let mut g = f.clone();
        g.alphas = Some(vec![1.05, 1.0]);
        assert!(!is_delta_interacting(&g, 0.01).unwrap());
        let (r, rr) = R_ij_and_R(&f).unwrap();
        assert_eq!(r[0][1], 10.0);
        assert_eq!(rr, 5.0);
        assert_eq!(classify_pair(&f, 0, 1).unwrap(), PairKind::Cluster);
    }

    #[test]
    fn single_bubble_rejected() {
        let a = Ambient::new(3, 0.5).unwrap();
        let f = BubbleFamily::new(a, vec![Bubble::at_origin(3, 1.0)], None).unwrap();
        assert!(matches!(family_q(&f), Err(Error::Precondition(_))));
        assert!(R_ij_and_R(&f).is_err());
    }

    #[test]
    fn tower_and_tie() {
        let a = Ambient::new(3, 0.5).unwrap();
        let f = BubbleFamily::new(a, vec![Bubble::at_origin(3, 100.0), Bubble::at_origin(3, 1.0)], None).unwrap();
        assert_eq!(R_ij_and_R(&f).unwrap().0[0][1], 10.0);
        assert_eq!(classify_pair(&f, 0, 1).unwrap(), PairKind::Tower);
        let tie = BubbleFamily::new(
            a,
            vec![Bubble::at_origin(3, 4.0), Bubble::new(vec![1.0, 0.0, 0.0], 1.0).unwrap()],
            None,
        )
        .unwrap();
        assert_eq!(classify_pair(&tie, 0, 1).unwrap(), PairKind::Tower);
    }

    #[test]
    fn json_round_trip() {
        let mut f = unit_pair(4, 0.5, 3.3);
        f.alphas = Some(vec![0.9, 1.1]);
        let back = BubbleFamily::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(back.bubbles, f.bubbles);
        assert_eq!(back.alphas, f.alphas);
        assert!(BubbleFamily::from_json(r#"{"n":3,"s":0.5,"bubbles":[]}"#).is_err());
    }
}
