//! Weight functions V, W built from the bubbles of a family, the smooth
//! min-approximation F, and sampled verification of the pointwise inequalities
//! they satisfy.

use crate::bubbles::{bubble_eval, classify_pair, family_q, Ambient, BubbleFamily, PairKind, R_ij_and_R};
use crate::error::{Error, Result};
use crate::fraclap::{fraclap_inverse_quadratic, FracOrder};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightContext {
    pub family: BubbleFamily,
    /// The weight radius R (half the minimal R_ij for families with ν ≥ 2).
    pub r: f64,
    pub mu: f64,
}

pub const DEFAULT_MU: f64 = 0.1;

impl WeightContext {
    /// R from the family geometry.
    pub fn new(family: BubbleFamily, mu: f64) -> Result<Self> {
        let (_, r) = R_ij_and_R(&family)?;
        Self::with_r(family, r, mu)
    }

    /// Explicit R, needed for single bubbles where R is not defined by the geometry.
    pub fn with_r(family: BubbleFamily, r: f64, mu: f64) -> Result<Self> {
        if !(r > 1.0 && r.is_finite()) {
            return Err(Error::Precondition(format!("weight radius R = {r} must exceed 1")));
        }
        if !(mu > 0.0 && mu < 0.5) {
            return Err(Error::Domain(format!("mu = {mu} not in (0, 1/2)")));
        }
        Ok(Self { family, r, mu })
    }

    fn amb(&self) -> Ambient {
        self.family.ambient
    }
}

/// w_{i,1}, w_{i,2}, v_{i,1}, v_{i,2} at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pieces {
    pub w1: f64,
    pub w2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl Pieces {
    pub fn w(&self) -> f64 {
        self.w1 + self.w2
    }
    pub fn v(&self) -> f64 {
        self.v1 + self.v2
    }
}

/// Un-indicated factors (a_W, b_W, a_V, b_V) of bubble i at x, each without its λ power:
/// R^(2s-n)⟨y⟩^(-2s), R^(-4s)⟨y⟩^(-(n-4s)), R^(2s-n)⟨y⟩^(-4s), R^(-4s)⟨y⟩^(-(n-2s)).
fn raw_factors(ctx: &WeightContext, i: usize, x: &[f64]) -> ([f64; 4], f64) {
    let amb = ctx.amb();
    let (n, s) = (amb.n() as f64, amb.s());
    let b = &ctx.family.bubbles[i];
    let y2 = b.lambda * b.lambda * b.dist2(x);
    let br = 1.0 + y2;
    let r = ctx.r;
    let inner = r.powf(2.0 * s - n);
    let outer = r.powf(-4.0 * s);
    (
        [
            inner * br.powf(-s),
            outer * br.powf(-(n - 4.0 * s) / 2.0),
            inner * br.powf(-2.0 * s),
            outer * br.powf(-(n - 2.0 * s) / 2.0),
        ],
        y2.sqrt(),
    )
}

pub fn pieces(ctx: &WeightContext, i: usize, x: &[f64]) -> Pieces {
    let amb = ctx.amb();
    let (n, s) = (amb.n() as f64, amb.s());
    let lam = ctx.family.bubbles[i].lambda;
    let (f, ay) = raw_factors(ctx, i, x);
    let lw = lam.powf((n - 2.0 * s) / 2.0);
    let lv = lam.powf((n + 2.0 * s) / 2.0);
    let inner = ay <= ctx.r;
    let outer = ay >= 0.5 * ctx.r;
    Pieces {
        w1: if inner { lw * f[0] } else { 0.0 },
        w2: if outer { lw * f[1] } else { 0.0 },
        v1: if inner { lv * f[2] } else { 0.0 },
        v2: if outer { lv * f[3] } else { 0.0 },
    }
}

#[allow(non_snake_case)]
pub fn eval_W(ctx: &WeightContext, x: &[f64]) -> f64 {
    (0..ctx.family.len()).map(|i| pieces(ctx, i, x).w()).sum()
}

#[allow(non_snake_case)]
pub fn eval_V(ctx: &WeightContext, x: &[f64]) -> f64 {
    (0..ctx.family.len()).map(|i| pieces(ctx, i, x).v()).sum()
}

/// (a+b)/2 - sqrt((a-b)²/4 + μab), a smooth 1-homogeneous surrogate for min(a, b).
#[allow(non_snake_case)]
pub fn F_min_approx(a: f64, b: f64, mu: f64) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(Error::Domain(format!("F needs a, b >= 0 (a = {a}, b = {b})")));
    }
    if !(mu > 0.0 && mu < 0.5) {
        return Err(Error::Domain(format!("mu = {mu} not in (0, 1/2)")));
    }
    let h = 0.5 * (a - b);
    let root = (h * h + mu * a * b).sqrt();
    let sum = 0.5 * (a + b);
    // sum - root loses everything when one argument dominates; use the conjugate form.
    let denom = sum + root;
    Ok(if denom > 0.0 { (1.0 - mu) * a * b / denom } else { 0.0 })
}

fn tilde(ctx: &WeightContext, distinguished: usize, set: &[usize], x: &[f64], v: bool) -> Result<f64> {
    let k = ctx.family.len();
    if distinguished >= k || set.iter().any(|&j| j >= k) {
        return Err(Error::Domain("index outside the family".into()));
    }
    let amb = ctx.amb();
    let (n, s) = (amb.n() as f64, amb.s());
    let mut total = 0.0;
    for &j in set {
        let (f, _) = raw_factors(ctx, j, x);
        let lam = ctx.family.bubbles[j].lambda;
        total += if v {
            lam.powf((n + 2.0 * s) / 2.0) * F_min_approx(f[2], f[3], ctx.mu)?
        } else {
            lam.powf((n - 2.0 * s) / 2.0) * F_min_approx(f[0], f[1], ctx.mu)?
        };
    }
    let p = pieces(ctx, distinguished, x);
    Ok(total + if v { p.v1 } else { p.w1 })
}

/// W̃ = Σ_{j∈J} λ_j^((n-2s)/2) F(R^(2s-n)⟨y_j⟩^(-2s), R^(-4s)⟨y_j⟩^(-(n-4s))) + w_{i,1}, i distinguished.
#[allow(non_snake_case)]
pub fn eval_tilde_W(ctx: &WeightContext, distinguished: usize, set: &[usize], x: &[f64]) -> Result<f64> {
    tilde(ctx, distinguished, set, x, false)
}

#[allow(non_snake_case)]
pub fn eval_tilde_V(ctx: &WeightContext, distinguished: usize, set: &[usize], x: &[f64]) -> Result<f64> {
    tilde(ctx, distinguished, set, x, true)
}

/// Structured sample set: per bubble, log-radial shells in |y| over
/// [r_min, r_max_factor·R] along a fixed direction design, the centers, and
/// midpoints of inter-center segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub shells_per_decade: usize,
    pub r_min: f64,
    pub r_max_factor: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            shells_per_decade: 8,
            r_min: 1e-2,
            r_max_factor: 10.0,
        }
    }
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (norm > 0.0).then(|| v.iter().map(|a| a / norm).collect())
}

/// Direction design at center i: ±e_k, ±(e_k ± e_l)/√2, and ± the unit vectors
/// toward the other centers.
fn directions(family: &BubbleFamily, i: usize) -> Vec<Vec<f64>> {
    let n = family.ambient.n() as usize;
    let mut out = Vec::new();
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        out.push(e);
        for l in k + 1..n {
            for sg in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[k] = std::f64::consts::FRAC_1_SQRT_2;
                e[l] = sg * std::f64::consts::FRAC_1_SQRT_2;
                out.push(e);
            }
        }
    }
    for (j, b) in family.bubbles.iter().enumerate() {
        if j != i {
            let d: Vec<f64> = b.z.iter().zip(&family.bubbles[i].z).map(|(a, c)| a - c).collect();
            if let Some(u) = unit(&d) {
                out.push(u);
            }
        }
    }
    let neg: Vec<Vec<f64>> = out.iter().map(|v| v.iter().map(|a| -a).collect()).collect();
    out.extend(neg);
    out
}

pub fn structured_grid(ctx: &WeightContext, grid: &GridSpec) -> Vec<Vec<f64>> {
    let fam = &ctx.family;
    let r_hi = grid.r_max_factor * ctx.r;
    let decades = (r_hi / grid.r_min).log10();
    let count = (decades * grid.shells_per_decade as f64).ceil() as usize + 1;
    let radii: Vec<f64> = (0..count)
        .map(|k| grid.r_min * (r_hi / grid.r_min).powf(k as f64 / (count - 1) as f64))
        .collect();
    let mut pts = Vec::new();
    for (i, b) in fam.bubbles.iter().enumerate() {
        pts.push(b.z.clone());
        for dir in directions(fam, i) {
            for &r in &radii {
                pts.push(b.z.iter().zip(&dir).map(|(z, d)| z + r / b.lambda * d).collect());
            }
        }
        for c in fam.bubbles.iter().skip(i + 1) {
            pts.push(b.z.iter().zip(&c.z).map(|(a, d)| 0.5 * (a + d)).collect());
        }
    }
    pts
}

/// Grid supremum and where it is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub grid: GridSpec,
    pub points: usize,
}

fn sup_once<F: Fn(&[f64]) -> f64>(ratio: &F, pts: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let mut best = (0.0f64, pts.first().cloned().unwrap_or_default());
    for x in pts {
        let v = ratio(x);
        if v.is_finite() && v > best.0 {
            best = (v, x.clone());
        }
    }
    best
}

/// Sup of `ratio` over the structured grid, doubling the shell density until the
/// value moves by less than 1%.
pub fn grid_sup<F: Fn(&[f64]) -> f64>(ratio: F, ctx: &WeightContext, start: &GridSpec) -> SupResult {
    let mut grid = *start;
    let mut pts = structured_grid(ctx, &grid);
    let (mut val, mut arg) = sup_once(&ratio, &pts);
    for _ in 0..5 {
        let mut finer = grid;
        finer.shells_per_decade *= 2;
        let fp = structured_grid(ctx, &finer);
        let (v2, a2) = sup_once(&ratio, &fp);
        let settled = (v2 - val).abs() <= 0.01 * v2.abs().max(1e-300);
        grid = finer;
        pts = fp;
        val = v2;
        arg = a2;
        if settled {
            break;
        }
    }
    SupResult {
        value: val,
        argmax: arg,
        grid,
        points: pts.len(),
    }
}

/// ‖φ‖_* = sup |φ| / W.
pub fn star_norm<F: Fn(&[f64]) -> f64>(phi: F, ctx: &WeightContext, grid: &GridSpec) -> SupResult {
    grid_sup(|x| phi(x).abs() / eval_W(ctx, x), ctx, grid)
}

/// ‖h‖_** = sup |h| / V.
pub fn doublestar_norm<F: Fn(&[f64]) -> f64>(h: F, ctx: &WeightContext, grid: &GridSpec) -> SupResult {
    grid_sup(|x| h(x).abs() / eval_V(ctx, x), ctx, grid)
}

/// (Σ α_i U_i)^p - Σ (α_i U_i)^p, signed powers.
pub fn interaction_term(family: &BubbleFamily, x: &[f64]) -> f64 {
    let amb = &family.ambient;
    let p = amb.p();
    let mut sigma = 0.0;
    let mut sum = 0.0;
    for (i, b) in family.bubbles.iter().enumerate() {
        let u = family.alpha(i) * bubble_eval(amb, b, x);
        sigma += u;
        sum += u.abs().powf(p - 1.0) * u;
    }
    sigma.abs().powf(p - 1.0) * sigma - sum
}

/// sup |σ^p - Σ U_i^p| / V over the grid; the family must be δ-interacting with δ ≤ 0.01.
pub fn verify_h_bound(ctx: &WeightContext, grid: &GridSpec) -> Result<SupResult> {
    let fam = &ctx.family;
    if fam.len() >= 2 {
        let q = family_q(fam)?;
        if q > 0.01 {
            return Err(Error::Precondition(format!("family interaction Q = {q:e} exceeds 0.01")));
        }
    }
    if fam.len() == 1 {
        return Ok(SupResult {
            value: 0.0,
            argmax: fam.bubbles[0].z.clone(),
            grid: *grid,
            points: 0,
        });
    }
    Ok(doublestar_norm(|x| interaction_term(fam, x), ctx, grid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceReport {
    pub n: u32,
    pub s: f64,
    /// min over the grid of (-Δ)^s(1+r²)^(-s) · (1+r²)^(2s).
    pub alpha: f64,
    pub alpha_argmin: f64,
    /// min over the grid of (-Δ)^s⟨y⟩^(-(n-4s)) · ⟨y⟩^(n-2s).
    pub companion_min: f64,
    pub companion_argmin: f64,
    /// product at r = 10³ over product at r = 10².
    pub tail_ratio: f64,
    /// The companion inequality is checked with negative exponents; the displayed
    /// form with positive exponents is not what the weights need.
    pub companion_sign_note: String,
}

/// 0 followed by `count` log-spaced radii in [1e-3, 1e3].
pub fn laplace_grid(count: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..count).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / (count - 1) as f64)));
    g
}

pub fn verify_laplace_inequality(amb: &Ambient, grid: &[f64]) -> Result<LaplaceReport> {
    let (n, s) = (amb.n(), amb.s());
    let nf = n as f64;
    if !(nf > 4.0 * s) {
        return Err(Error::Precondition(format!("need n > 4s (n = {n}, s = {s})")));
    }
    let t = FracOrder::new(s)?;
    let prod = |r: f64| -> Result<f64> { Ok(fraclap_inverse_quadratic(n, t, s, r)? * (1.0 + r * r).powf(2.0 * s)) };
    let comp = |r: f64| -> Result<f64> {
        Ok(fraclap_inverse_quadratic(n, t, (nf - 4.0 * s) / 2.0, r)? * (1.0 + r * r).powf((nf - 2.0 * s) / 2.0))
    };
    let (mut a, mut ar, mut c, mut cr) = (f64::INFINITY, 0.0, f64::INFINITY, 0.0);
    for &r in grid {
        let v = prod(r)?;
        if v < a {
            a = v;
            ar = r;
        }
        let w = comp(r)?;
        if w < c {
            c = w;
            cr = r;
        }
    }
    Ok(LaplaceReport {
        n,
        s,
        alpha: a,
        alpha_argmin: ar,
        companion_min: c,
        companion_argmin: cr,
        tail_ratio: prod(1e3)? / prod(1e2)?,
        companion_sign_note: "verified as (-Δ)^s<y>^-(n-4s) >= c <y>^-(n-2s); the displayed form has positive exponents".into(),
    })
}

/// One sampled inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub inequality_id: String,
    pub params: serde_json::Value,
    pub sup_ratio: f64,
    pub argmax_point: Vec<f64>,
    pub grid_spec: GridSpec,
    pub samples_in_region: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ComparisonReport {
    pub records: Vec<VerificationRecord>,
}

/// Bubbles more concentrated than i: towers with λ_j ≥ λ_i and clusters with λ_j > λ_i.
pub fn concentrated_set(family: &BubbleFamily, i: usize) -> Result<Vec<usize>> {
    let li = family.bubbles[i].lambda;
    let mut out = Vec::new();
    for (j, b) in family.bubbles.iter().enumerate() {
        if j == i {
            continue;
        }
        let keep = match classify_pair(family, i, j)? {
            PairKind::Tower => b.lambda >= li,
            PairKind::Cluster => b.lambda > li,
        };
        if keep {
            out.push(j);
        }
    }
    Ok(out)
}

/// L_i = L + the largest rescaled offset |λ_i(z_j - z_i)| that stays below L.
fn core_radius(family: &BubbleFamily, i: usize, l: f64) -> f64 {
    let bi = &family.bubbles[i];
    let near = family
        .bubbles
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, b)| bi.lambda * bi.center_dist(b))
        .filter(|d| *d < l)
        .fold(0.0, f64::max);
    l + near
}

fn y_norm(family: &BubbleFamily, i: usize, x: &[f64]) -> f64 {
    let b = &family.bubbles[i];
    b.lambda * b.dist2(x).sqrt()
}

/// Empirical ε₁ for the two-bubble outer-region comparison and the two
/// comparisons in the neighbourhoods A_i of more concentrated bubbles.
pub fn verify_weight_comparisons(ctx: &WeightContext, l: f64, eps: f64, grid: &GridSpec) -> Result<ComparisonReport> {
    let fam = &ctx.family;
    let amb = fam.ambient;
    let pm1 = amb.p() - 1.0;
    let mut report = ComparisonReport::default();
    if fam.len() < 2 {
        return Ok(report);
    }
    let mut fine = *grid;
    fine.shells_per_decade *= 4;
    fine.r_min = fine.r_min.min(1e-3);
    let pts = structured_grid(ctx, &fine);
    let u = |i: usize, x: &[f64]| bubble_eval(&amb, &fam.bubbles[i], x);
    let li: Vec<f64> = (0..fam.len()).map(|i| core_radius(fam, i, l)).collect();

    let mut push = |id: String, params: serde_json::Value, best: (f64, Vec<f64>), count: usize| {
        report.records.push(VerificationRecord {
            inequality_id: id,
            params,
            sup_ratio: best.0,
            argmax_point: best.1,
            grid_spec: fine,
            samples_in_region: count,
        })
    };

    for i in 0..fam.len() {
        for j in i + 1..fam.len() {
            let mut best = (0.0f64, Vec::new());
            let mut count = 0;
            for x in &pts {
                if y_norm(fam, i, x) < li[i] || y_norm(fam, j, x) < li[j] {
                    continue;
                }
                count += 1;
                let (pi, pj) = (pieces(ctx, i, x), pieces(ctx, j, x));
                let lhs = (u(i, x).powf(pm1) + u(j, x).powf(pm1)) * (pi.w() + pj.w());
                let rhs = pi.v() + pj.v();
                let r = lhs / rhs;
                if r > best.0 {
                    best = (r, x.clone());
                }
            }
            let params = serde_json::json!({"i": i, "j": j, "L": l, "R": ctx.r, "n": amb.n(), "s": amb.s()});
            push("outer_region_pair".into(), params, best, count);
        }
    }

    for i in 0..fam.len() {
        let set = concentrated_set(fam, i)?;
        if set.is_empty() {
            continue;
        }
        let bi = &fam.bubbles[i];
        let in_region = |x: &[f64]| {
            let yi = y_norm(fam, i, x);
            yi <= li[i]
                && set.iter().any(|&j| {
                    let zt: Vec<f64> = fam.bubbles[j].z.iter().zip(&bi.z).map(|(a, b)| bi.lambda * (a - b)).collect();
                    let off = x
                        .iter()
                        .zip(&bi.z)
                        .zip(&zt)
                        .map(|((xv, zi), t)| (bi.lambda * (xv - zi) - t).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    off <= eps && y_norm(fam, j, x) >= li[j]
                })
        };
        let (mut b1, mut b2) = ((0.0f64, Vec::new()), (0.0f64, Vec::new()));
        let mut count = 0;
        for x in &pts {
            if !in_region(x) {
                continue;
            }
            count += 1;
            let sum_w: f64 = set.iter().map(|&j| pieces(ctx, j, x).w()).sum();
            let sum_v: f64 = set.iter().map(|&j| pieces(ctx, j, x).v()).sum();
            let sum_up: f64 = set.iter().map(|&j| u(j, x).powf(pm1)).sum();
            let own = pieces(ctx, i, x);
            let r1 = u(i, x).powf(pm1) * sum_w / sum_v;
            let r2 = sum_up * own.w1 / (sum_v + own.v1);
            if r1 > b1.0 {
                b1 = (r1, x.clone());
            }
            if r2 > b2.0 {
                b2 = (r2, x.clone());
            }
        }
        let params = serde_json::json!({"i": i, "set": set, "L": l, "eps": eps, "R": ctx.r, "n": amb.n(), "s": amb.s()});
        push("concentrated_neighbourhood_own_power".into(), params.clone(), b1, count);
        push("concentrated_neighbourhood_inner_piece".into(), params, b2, count);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::Bubble;

    fn ctx1(n: u32, s: f64, r: f64) -> WeightContext {
        let amb = Ambient::new(n, s).unwrap();
        let fam = BubbleFamily::new(amb, vec![Bubble::at_origin(n, 1.0)], None).unwrap();
        WeightContext::with_r(fam, r, DEFAULT_MU).unwrap()
    }

    #[test]
    fn single_bubble_center_values() {
        let c = ctx1(3, 0.5, 10.0);
        let x = [0.0; 3];
        assert!((eval_W(&c, &x) - 10f64.powf(-2.0)).abs() < 1e-16);
        assert!((eval_V(&c, &x) - 10f64.powf(-2.0)).abs() < 1e-16);
    }

    #[test]
    fn indicator_boundaries_inclusive() {
        let c = ctx1(4, 0.5, 10.0);
        let p = pieces(&c, 0, &[10.0, 0.0, 0.0, 0.0]);
        assert!(p.w1 > 0.0 && p.w2 > 0.0 && p.v1 > 0.0 && p.v2 > 0.0);
        let p = pieces(&c, 0, &[5.0, 0.0, 0.0, 0.0]);
        assert!(p.w1 > 0.0 && p.w2 > 0.0);
        let far = pieces(&c, 0, &[100.0, 0.0, 0.0, 0.0]);
        assert_eq!(far.w1, 0.0);
        let br: f64 = 1.0 + 1e4;
        assert!((far.w2 - 10f64.powf(-2.0) * br.powf(-1.0)).abs() < 1e-18);
        assert!((far.v2 - 10f64.powf(-2.0) * br.powf(-1.5)).abs() < 1e-20);
    }

    #[test]
    fn min_approx_identities() {
        let mu = 0.1;
        assert!((F_min_approx(2.0, 2.0, mu).unwrap() - 2.0 * (1.0 - mu.sqrt())).abs() < 1e-15);
        let f = F_min_approx(1.0, 1e6, mu).unwrap();
        assert!(f > 0.0 && f <= 1.0);
        let (a, b, t) = (0.37, 5.1, 13.0);
        let lhs = F_min_approx(t * a, t * b, mu).unwrap();
        assert!((lhs - t * F_min_approx(a, b, mu).unwrap()).abs() <= 4.0 * f64::EPSILON * lhs);
        assert!(F_min_approx(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn star_norm_of_weight_is_one() {
        let amb = Ambient::new(4, 0.5).unwrap();
        let fam = BubbleFamily::new(
            amb,
            vec![Bubble::at_origin(4, 1.0), Bubble::new(vec![100.0, 0.0, 0.0, 0.0], 1.0).unwrap()],
            None,
        )
        .unwrap();
        let c = WeightContext::new(fam, DEFAULT_MU).unwrap();
        let g = GridSpec::default();
        assert!((star_norm(|x| eval_W(&c, x), &c, &g).value - 1.0).abs() < 1e-14);
        assert!((star_norm(|x| 2.0 * eval_W(&c, x), &c, &g).value - 2.0).abs() < 1e-14);
    }

    #[test]
    fn h_bound_zero_for_single_bubble() {
        let c = ctx1(4, 0.5, 10.0);
        assert_eq!(verify_h_bound(&c, &GridSpec::default()).unwrap().value, 0.0);
    }

    #[test]
    fn tilde_weights_reduce_and_compare() {
        let amb = Ambient::new(4, 0.5).unwrap();
        let fam = BubbleFamily::new(amb, vec![Bubble::at_origin(4, 1.0), Bubble::at_origin(4, 1e4)], None).unwrap();
        let c = WeightContext::new(fam, DEFAULT_MU).unwrap();
        let x = [0.003, 0.0, 0.0, 0.0];
        assert_eq!(eval_tilde_W(&c, 0, &[], &x).unwrap(), pieces(&c, 0, &x).w1);
        let mut worst = 1.0f64;
        let mut best = 1.0f64;
        for pt in structured_grid(&c, &GridSpec::default()) {
            let reference = pieces(&c, 1, &pt).w() + pieces(&c, 0, &pt).w1;
            let r = eval_tilde_W(&c, 0, &[1], &pt).unwrap() / reference;
            worst = worst.min(r);
            best = best.max(r);
        }
        assert!(worst >= 0.25 && best <= 4.0, "{worst} {best}");
    }

    #[test]
    fn laplace_inequality_positive() {
        for (n, s) in [(3, 0.5), (4, 0.5), (3, 0.7)] {
            let rep = verify_laplace_inequality(&Ambient::new(n, s).unwrap(), &laplace_grid(120)).unwrap();
            assert!(rep.alpha > 0.0 && rep.companion_min > 0.0);
            assert!((rep.tail_ratio - 1.0).abs() < 0.2);
        }
        assert!(verify_laplace_inequality(&Ambient::new(3, 0.8).unwrap(), &laplace_grid(10)).is_err());
    }
}
