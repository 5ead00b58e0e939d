//! Structured elements of Ḣ^s (sums of bubbles and their derivative modes) and
//! their inner products ⟨u, v⟩ = ∫ ((-Δ)^s u) v.

use super::gk::Tol;
use super::radial::integrate_radial_tol;
use super::two_center::{integrate_two_center_geo, TwoCenterGeometry};
use super::QuadratureSpec;
use crate::bubbles::{bubble_eval, z_mode_value, Ambient, Bubble, BubbleFamily, ZMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionRepr {
    pub ambient: Ambient,
    pub bubble_terms: Vec<(f64, Bubble)>,
    /// Modes refer to `bubble_terms` by index; the bubble's own coefficient may be 0.
    pub z_terms: Vec<(f64, ZMode)>,
}

/// One term c·D^a U[z,λ] with a = 0 for the bubble itself.
#[derive(Debug, Clone, Copy)]
pub struct Atom<'a> {
    pub coef: f64,
    pub bubble: &'a Bubble,
    pub a: usize,
}

impl Atom<'_> {
    pub fn value(&self, amb: &Ambient, x: &[f64]) -> f64 {
        if self.a == 0 {
            bubble_eval(amb, self.bubble, x)
        } else {
            z_mode_value(amb, self.bubble, self.a, x)
        }
    }

    /// (-Δ)^s of the atom: U^p or p U^(p-1) Z.
    pub fn fraclap(&self, amb: &Ambient, x: &[f64]) -> f64 {
        let u = bubble_eval(amb, self.bubble, x);
        if self.a == 0 {
            u.powf(amb.p())
        } else {
            amb.p() * u.powf(amb.p() - 1.0) * z_mode_value(amb, self.bubble, self.a, x)
        }
    }

    fn is_radial(&self, n: u32) -> bool {
        self.a == 0 || self.a == n as usize + 1
    }
}

impl FunctionRepr {
    pub fn new(ambient: Ambient, bubble_terms: Vec<(f64, Bubble)>, z_terms: Vec<(f64, ZMode)>) -> Result<Self> {
        let n = ambient.n();
        for (c, b) in &bubble_terms {
            if b.z.len() != n as usize || !c.is_finite() {
                return Err(Error::Domain(format!("bubble term must be finite and live in R^{n}")));
            }
        }
        for (c, zm) in &z_terms {
            ZMode::new(zm.bubble_index, zm.a, n)?;
            if zm.bubble_index >= bubble_terms.len() || !c.is_finite() {
                return Err(Error::Domain(format!("mode refers to missing bubble {}", zm.bubble_index)));
            }
        }
        Ok(Self {
            ambient,
            bubble_terms,
            z_terms,
        })
    }

    /// σ = Σ α_i U_i.
    pub fn from_family(family: &BubbleFamily) -> Self {
        let terms = family
            .bubbles
            .iter()
            .enumerate()
            .map(|(i, b)| (family.alpha(i), b.clone()))
            .collect();
        Self {
            ambient: family.ambient,
            bubble_terms: terms,
            z_terms: Vec::new(),
        }
    }

    pub fn single(ambient: Ambient, b: Bubble) -> Self {
        Self {
            ambient,
            bubble_terms: vec![(1.0, b)],
            z_terms: Vec::new(),
        }
    }

    pub fn zero(ambient: Ambient) -> Self {
        Self {
            ambient,
            bubble_terms: Vec::new(),
            z_terms: Vec::new(),
        }
    }

    pub fn atoms(&self) -> Vec<Atom<'_>> {
        let mut out: Vec<Atom<'_>> = self.bubble_terms.iter().map(|(c, b)| Atom { coef: *c, bubble: b, a: 0 }).collect();
        out.extend(self.z_terms.iter().map(|(c, zm)| Atom {
            coef: *c,
            bubble: &self.bubble_terms[zm.bubble_index].1,
            a: zm.a,
        }));
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.atoms().iter().map(|t| t.coef * t.value(&self.ambient, x)).sum()
    }

    /// (-Δ)^s u at x, term by term.
    pub fn fraclap_eval(&self, x: &[f64]) -> f64 {
        self.atoms().iter().map(|t| t.coef * t.fraclap(&self.ambient, x)).sum()
    }

    /// (-Δ)^s u - u|u|^(p-1) at x.
    pub fn residual_eval(&self, x: &[f64]) -> f64 {
        let mut u = 0.0;
        let mut lu = 0.0;
        for t in self.atoms() {
            u += t.coef * t.value(&self.ambient, x);
            lu += t.coef * t.fraclap(&self.ambient, x);
        }
        lu - u * u.abs().powf(self.ambient.p() - 1.0)
    }

    /// self + k·other.
    pub fn plus_scaled(&self, k: f64, other: &FunctionRepr) -> Result<Self> {
        if other.ambient != self.ambient {
            return Err(Error::Domain("ambient mismatch".into()));
        }
        let off = self.bubble_terms.len();
        let mut out = self.clone();
        out.bubble_terms.extend(other.bubble_terms.iter().map(|(c, b)| (k * c, b.clone())));
        out.z_terms.extend(other.z_terms.iter().map(|(c, zm)| {
            (
                k * c,
                ZMode {
                    bubble_index: zm.bubble_index + off,
                    a: zm.a,
                },
            )
        }));
        Ok(out)
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.bubble_terms.iter_mut().for_each(|t| t.0 *= k);
        out.z_terms.iter_mut().for_each(|t| t.0 *= k);
        out
    }

    /// x ↦ μ^((n-2s)/2) u(μx); bubbles and modes map to (z/μ, μλ) with equal coefficients.
    pub fn critical_rescaled(&self, mu: f64) -> Self {
        let mut out = self.clone();
        for (_, b) in out.bubble_terms.iter_mut() {
            b.z.iter_mut().for_each(|v| *v /= mu);
            b.lambda *= mu;
        }
        out
    }

    /// x ↦ u(x - v).
    pub fn translated(&self, v: &[f64]) -> Self {
        let mut out = self.clone();
        for (_, b) in out.bubble_terms.iter_mut() {
            b.z.iter_mut().zip(v).for_each(|(z, t)| *z += t);
        }
        out
    }

    /// The common center when every term is radial about one point.
    pub fn radial_center(&self) -> Option<Vec<f64>> {
        let n = self.ambient.n();
        let atoms = self.atoms();
        let z0 = atoms.first()?.bubble.z.clone();
        atoms.iter().all(|t| t.is_radial(n) && t.bubble.z == z0).then_some(z0)
    }

    /// Length scales 1/λ of all terms.
    pub fn widths(&self) -> Vec<f64> {
        self.bubble_terms.iter().map(|(_, b)| 1.0 / b.lambda).collect()
    }
}

fn check_same_ambient(u: &FunctionRepr, v: &FunctionRepr) -> Result<Ambient> {
    if u.ambient != v.ambient {
        return Err(Error::Domain("inner product of elements over different ambients".into()));
    }
    Ok(u.ambient)
}

/// ⟨α, β⟩ for two atoms by direct quadrature, symmetrised as ½(∫ L(α)β + ∫ αL(β)).
pub fn atom_inner(amb: &Ambient, x: &Atom<'_>, y: &Atom<'_>, spec: &QuadratureSpec) -> Result<f64> {
    let n = amb.n() as f64;
    let geo = TwoCenterGeometry::from_bubbles(x.bubble, y.bubble, 2.0 * n);
    let g = |pt: &[f64]| 0.5 * (x.fraclap(amb, pt) * y.value(amb, pt) + x.value(amb, pt) * y.fraclap(amb, pt));
    integrate_two_center_geo(g, &geo, spec)
}

/// ⟨u, v⟩_{Ḣ^s} by expanding both arguments and integrating every pair of terms
/// over its two-center geometry.
pub fn hs_inner(u: &FunctionRepr, v: &FunctionRepr, spec: &QuadratureSpec) -> Result<f64> {
    let amb = check_same_ambient(u, v)?;
    let mut total = 0.0;
    for x in u.atoms() {
        for y in v.atoms() {
            let k = x.coef * y.coef;
            if k != 0.0 {
                total += k * atom_inner(&amb, &x, &y, spec)?;
            }
        }
    }
    Ok(total)
}

/// Φ(τ) = ⟨U_i, U_j⟩ depends on the pair only through the conformal invariant
/// τ = λ_i/λ_j + λ_j/λ_i + λ_iλ_j|z_i - z_j|². With τ = 2 cosh ℓ,
/// Ψ(ℓ) = Φ(2 cosh ℓ) = ∫ U[0,1]^p U[0,e^ℓ], and ℓ-derivatives of U[0,e^ℓ] are
/// U·P_k(T) with T = tanh(ℓ + log r).
#[derive(Debug, Clone)]
pub struct PairKernel {
    amb: Ambient,
    tol: Tol,
    /// Coefficients of P_0..P_4 in powers of T.
    polys: Vec<Vec<f64>>,
}

/// (Φ, dΦ/dτ, d²Φ/dτ²) at one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiDerivs {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
}

impl PairKernel {
    pub fn new(amb: Ambient, spec: &QuadratureSpec) -> Self {
        let m = amb.m();
        let mut polys = vec![vec![1.0]];
        for k in 0..4 {
            let p: &Vec<f64> = &polys[k];
            let mut next = vec![0.0; p.len() + 1];
            for (i, &c) in p.iter().enumerate() {
                next[i + 1] -= m * c;
                if i >= 1 {
                    // (1 - T²) i c T^(i-1)
                    next[i - 1] += i as f64 * c;
                    next[i + 1] -= i as f64 * c;
                }
            }
            polys.push(next);
        }
        let rel = (0.01 * spec.rel_tol).max(1e-13);
        Self {
            amb,
            tol: Tol::new(0.0, rel, spec.max_refinements).l1(),
            polys,
        }
    }

    /// Ψ^(k)(ℓ).
    pub fn psi(&self, k: usize, ell: f64) -> Result<f64> {
        let amb = self.amb;
        let (m, p, c) = (amb.m(), amb.p(), amb.c());
        let mu = ell.exp();
        let poly = &self.polys[k];
        let f = |r: f64| {
            let v = mu * mu * r * r;
            let t = (v - 1.0) / (v + 1.0);
            let pk = poly.iter().rev().fold(0.0, |acc, &cf| acc * t + cf);
            let u1 = c * (1.0 + r * r).powf(-m);
            let g = c * (mu / (1.0 + v)).powf(m);
            u1.powf(p) * g * pk
        };
        integrate_radial_tol(f, amb.n(), 2.0 * amb.n() as f64, &[1.0, 1.0 / mu], self.tol)
    }

    /// ℓ from τ - 2 = (λ_i - λ_j)²/(λ_iλ_j) + λ_iλ_j|Δz|², computed without cancellation.
    pub fn ell(bi: &Bubble, bj: &Bubble) -> f64 {
        let (li, lj) = (bi.lambda, bj.lambda);
        let tm2 = (li - lj).powi(2) / (li * lj) + li * lj * bi.dist2(&bj.z);
        2.0 * (tm2.max(0.0).sqrt() / 2.0).asinh()
    }

    pub fn phi(&self, ell: f64) -> Result<f64> {
        self.psi(0, ell)
    }

    pub fn derivs(&self, ell: f64, order: usize) -> Result<PhiDerivs> {
        let phi = self.psi(0, ell)?;
        if order == 0 {
            return Ok(PhiDerivs { phi, d1: 0.0, d2: 0.0 });
        }
        if ell < 1e-3 {
            let p2 = self.psi(2, ell)?;
            let p4 = self.psi(4, ell)?;
            let l2 = ell * ell;
            let d1 = 0.5 * (p2 - p4 * l2 / 3.0 - p2 * l2 / 6.0);
            let d2 = (p4 - p2) / 12.0;
            return Ok(PhiDerivs { phi, d1, d2 });
        }
        let p1 = self.psi(1, ell)?;
        let sh = ell.sinh();
        let d1 = p1 / (2.0 * sh);
        let d2 = if order >= 2 {
            let p2 = self.psi(2, ell)?;
            (p2 - p1 / ell.tanh()) / (4.0 * sh * sh)
        } else {
            0.0
        };
        Ok(PhiDerivs { phi, d1, d2 })
    }
}

/// D_i^a τ for a in 1..=n+1 where D^a = λ^-1 ∂_{z^a} (a ≤ n) or λ∂_λ (a = n+1),
/// acting on the parameters of `bi`.
fn dtau(bi: &Bubble, bj: &Bubble, a: usize) -> f64 {
    let n = bi.z.len();
    let (li, lj) = (bi.lambda, bj.lambda);
    if a <= n {
        2.0 * lj * (bi.z[a - 1] - bj.z[a - 1])
    } else {
        li / lj - lj / li + li * lj * bi.dist2(&bj.z)
    }
}

/// D_i^a D_j^b τ.
fn dtau2(bi: &Bubble, bj: &Bubble, a: usize, b: usize) -> f64 {
    let n = bi.z.len();
    let (li, lj) = (bi.lambda, bj.lambda);
    match (a <= n, b <= n) {
        (true, true) => {
            if a == b {
                -2.0
            } else {
                0.0
            }
        }
        (true, false) => 2.0 * lj * (bi.z[a - 1] - bj.z[a - 1]),
        (false, true) => 2.0 * li * (bj.z[b - 1] - bi.z[b - 1]),
        (false, false) => -li / lj - lj / li + li * lj * bi.dist2(&bj.z),
    }
}

/// ⟨α, β⟩ from the pair kernel.
pub fn atom_inner_invariant(kernel: &PairKernel, x: &Atom<'_>, y: &Atom<'_>) -> Result<f64> {
    let order = (x.a > 0) as usize + (y.a > 0) as usize;
    let d = kernel.derivs(PairKernel::ell(x.bubble, y.bubble), order)?;
    Ok(match (x.a, y.a) {
        (0, 0) => d.phi,
        (0, b) => d.d1 * dtau(y.bubble, x.bubble, b),
        (a, 0) => d.d1 * dtau(x.bubble, y.bubble, a),
        (a, b) => d.d2 * dtau(x.bubble, y.bubble, a) * dtau(y.bubble, x.bubble, b) + d.d1 * dtau2(x.bubble, y.bubble, a, b),
    })
}

/// ⟨u, v⟩_{Ḣ^s} through the pair kernel: one radial integral per derivative order
/// and pair instead of a two-dimensional integral.
pub fn hs_inner_invariant(u: &FunctionRepr, v: &FunctionRepr, spec: &QuadratureSpec) -> Result<f64> {
    let amb = check_same_ambient(u, v)?;
    let kernel = PairKernel::new(amb, spec);
    hs_inner_with_kernel(&kernel, u, v)
}

pub fn hs_inner_with_kernel(kernel: &PairKernel, u: &FunctionRepr, v: &FunctionRepr) -> Result<f64> {
    let mut total = 0.0;
    for x in u.atoms() {
        for y in v.atoms() {
            let k = x.coef * y.coef;
            if k != 0.0 {
                total += k * atom_inner_invariant(kernel, &x, &y)?;
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_two_center;

    fn amb(n: u32, s: f64) -> Ambient {
        Ambient::new(n, s).unwrap()
    }

    #[test]
    fn single_bubble_norm_is_energy() {
        for (n, s) in [(3, 0.5), (4, 0.5), (3, 0.75)] {
            let a = amb(n, s);
            let u = FunctionRepr::single(a, Bubble::at_origin(n, 1.7));
            let v = hs_inner(&u, &u, &QuadratureSpec::default()).unwrap();
            assert!(((v - a.energy()) / a.energy()).abs() < 1e-9, "{n} {s}: {v} vs {}", a.energy());
        }
    }

    #[test]
    fn separated_pair_matches_two_center_integral() {
        let a = amb(3, 0.5);
        let b1 = Bubble::new(vec![0.0; 3], 1.0).unwrap();
        let b2 = Bubble::new(vec![10.0, 0.0, 0.0], 1.0).unwrap();
        let spec = QuadratureSpec::default();
        let u = FunctionRepr::single(a, b1.clone());
        let v = FunctionRepr::single(a, b2.clone());
        let h = hs_inner(&u, &v, &spec).unwrap();
        let direct = integrate_two_center(|x| bubble_eval(&a, &b1, x).powf(a.p()) * bubble_eval(&a, &b2, x), &b1, &b2, &spec).unwrap();
        assert!(((h - direct) / direct).abs() < 1e-8);
    }

    #[test]
    fn bubble_orthogonal_to_own_dilation() {
        let a = amb(4, 0.5);
        let u = FunctionRepr::single(a, Bubble::at_origin(4, 1.0));
        let z = FunctionRepr::new(
            a,
            vec![(0.0, Bubble::at_origin(4, 1.0))],
            vec![(1.0, ZMode { bubble_index: 0, a: 5 })],
        )
        .unwrap();
        assert!(hs_inner(&u, &z, &QuadratureSpec::default()).unwrap().abs() < 1e-8);
    }

    #[test]
    fn invariant_path_matches_two_center_path() {
        let spec = QuadratureSpec::default();
        for (n, s) in [(3u32, 0.5), (4, 0.5), (3, 0.75)] {
            let a = amb(n, s);
            let mut z2 = vec![0.0; n as usize];
            z2[0] = 1.3;
            z2[1] = -0.4;
            let b1 = Bubble::new(vec![0.1; n as usize], 1.0).unwrap();
            let b2 = Bubble::new(z2, 2.5).unwrap();
            let modes: Vec<usize> = vec![0, 1, 2, n as usize + 1];
            let k = PairKernel::new(a, &spec);
            for &ia in &modes {
                for &ib in &modes {
                    for (bx, by) in [(&b1, &b2), (&b1, &b1)] {
                        let x = Atom {
                            coef: 1.0,
                            bubble: bx,
                            a: ia,
                        };
                        let y = Atom {
                            coef: 1.0,
                            bubble: by,
                            a: ib,
                        };
                        let slow = atom_inner(&a, &x, &y, &spec).unwrap();
                        let fast = atom_inner_invariant(&k, &x, &y).unwrap();
                        assert!((slow - fast).abs() < 1e-7 * a.energy(), "({n},{s}) a={ia} b={ib}: {slow} vs {fast}");
                    }
                }
            }
        }
    }

    #[test]
    fn near_coincident_pairs_are_continuous() {
        let spec = QuadratureSpec::default();
        let a = amb(3, 0.5);
        let k = PairKernel::new(a, &spec);
        let d_small = k.derivs(5e-4, 2).unwrap();
        let d_big = k.derivs(1.5e-3, 2).unwrap();
        assert!((d_small.d1 - d_big.d1).abs() < 1e-4 * d_small.d1.abs());
        assert!((d_small.d2 - d_big.d2).abs() < 1e-3 * d_small.d2.abs());
    }
}
