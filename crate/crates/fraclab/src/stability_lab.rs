//! Projection onto sums of bubbles, the deficit Γ, the logarithmic cut-off, and a
//! radial Galerkin estimate of the linearised spectrum.

use crate::appendix_suite::{fit_models, RateFit};
use crate::bubbles::{family_q, family_q_min_form, Ambient, Bubble, BubbleFamily, PairKind, ZMode};
use crate::error::{Error, Result};
use crate::fraclap::{fraclap_inverse_quadratic, fraclap_radial_numeric, FracOrder, RadialProfile};
use crate::quadrature::gk::Tol;
use crate::quadrature::radial::integrate_radial_tol;
use crate::quadrature::{
    hs_inner_with_kernel, integrate_radial, neg_sobolev_norm, DualNorm, FunctionRepr, NormSupport, PairKernel, QuadratureSpec,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// |⟨ρ, e⟩| / (‖e‖ · max(‖ρ‖, 1e-6‖u‖)) for one direction e (a = 0 is U_i itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orthogonality {
    pub bubble: usize,
    pub a: usize,
    pub inner: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub bubbles: BubbleFamily,
    /// ‖u − Σα_iU_i‖_{Ḣ^s}.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub orthogonality: Vec<Orthogonality>,
    /// Objective after every accepted step, across restarts and the polish.
    pub trace: Vec<f64>,
}

impl ProjectionResult {
    pub fn max_orthogonality(&self) -> f64 {
        self.orthogonality.iter().map(|o| o.normalized).fold(0.0, f64::max)
    }
}

/// Optimality threshold on the normalized orthogonality residuals.
pub const ORTHO_TOL: f64 = 1e-6;
const RESTARTS: usize = 3;

struct Layout {
    n: usize,
    nu: usize,
    with_alphas: bool,
}

impl Layout {
    fn per(&self) -> usize {
        self.n + 1 + self.with_alphas as usize
    }

    fn encode(&self, fam: &BubbleFamily) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.nu * self.per());
        for (i, b) in fam.bubbles.iter().enumerate() {
            v.extend(&b.z);
            v.push(b.lambda.ln());
            if self.with_alphas {
                v.push(fam.alpha(i));
            }
        }
        v
    }

    fn decode(&self, amb: Ambient, v: &[f64]) -> Result<BubbleFamily> {
        let mut bubbles = Vec::with_capacity(self.nu);
        let mut alphas = Vec::new();
        for c in v.chunks(self.per()) {
            bubbles.push(Bubble::new(c[..self.n].to_vec(), c[self.n].exp())?);
            if self.with_alphas {
                alphas.push(c[self.n + 1]);
            }
        }
        BubbleFamily::new(amb, bubbles, self.with_alphas.then_some(alphas))
    }

    fn steps(&self, fam: &BubbleFamily) -> Vec<f64> {
        let mut v = Vec::new();
        for b in &fam.bubbles {
            v.extend(std::iter::repeat(0.05 / b.lambda).take(self.n));
            v.push(0.05);
            if self.with_alphas {
                v.push(0.05);
            }
        }
        v
    }
}

/// Nelder–Mead with standard coefficients; returns (best point, value, iterations)
/// and appends the best value after each iteration to `trace`.
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    max_iter: usize,
    ftol: f64,
    trace: &mut Vec<f64>,
) -> (Vec<f64>, f64, usize) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for k in 0..d {
        let mut x = x0.to_vec();
        x[k] += steps[k];
        let v = f(&x);
        simplex.push((x, v));
    }
    let cmp = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    let mut it = 0;
    while it < max_iter {
        simplex.sort_by(cmp);
        trace.push(simplex[0].1);
        let spread = simplex[d].1 - simplex[0].1;
        if spread.abs() <= ftol {
            break;
        }
        it += 1;
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            centroid.iter_mut().zip(x).for_each(|(c, xi)| *c += xi / d as f64);
        }
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = along(0.5);
            let v = f(&x);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            x.iter_mut().zip(&best).for_each(|(xi, b)| *xi = b + 0.5 * (*xi - b));
            *v = f(x);
        }
    }
    simplex.sort_by(cmp);
    let (x, v) = simplex.swap_remove(0);
    (x, v, it)
}

/// Tangent directions of the manifold at `fam`, in parameter order, plus the
/// unnormalised modes used for the orthogonality report.
fn tangent(fam: &BubbleFamily, with_alphas: bool) -> Result<(Vec<FunctionRepr>, Vec<(usize, usize, FunctionRepr)>)> {
    let amb = fam.ambient;
    let n = amb.n() as usize;
    let mut cols = Vec::new();
    let mut modes = Vec::new();
    for (i, b) in fam.bubbles.iter().enumerate() {
        let al = fam.alpha(i);
        let mode = |a: usize, k: f64| FunctionRepr::new(amb, vec![(0.0, b.clone())], vec![(k, ZMode { bubble_index: 0, a })]);
        for a in 1..=n + 1 {
            // ∂_{z^a}U = λ Z^a, ∂_{log λ}U = Z^{n+1}
            let k = if a <= n { al * b.lambda } else { al };
            cols.push(mode(a, k)?);
            modes.push((i, a, mode(a, 1.0)?));
        }
        let ui = FunctionRepr::single(amb, b.clone());
        if with_alphas {
            cols.push(ui.clone());
        }
        modes.push((i, 0, ui));
    }
    Ok((cols, modes))
}

/// Eigen-decomposition of the unit-diagonal tangent Gram matrix; near-dependent
/// directions mean two bubbles are collapsing onto each other.
fn scaled_gram_eigen(g: &DMatrix<f64>, d: &[f64]) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let k = d.len();
    let gs = DMatrix::from_fn(k, k, |i, j| g[(i, j)] / (d[i] * d[j]));
    let eig = SymmetricEigen::new(gs);
    let emin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if emin < 1e-10 {
        return Err(Error::RankDeficient(format!(
            "tangent directions are nearly dependent (scaled Gram eigenvalue {emin:.3e}); bubbles collapsing"
        )));
    }
    Ok(eig)
}

fn objective(kernel: &PairKernel, uu: f64, u: &FunctionRepr, fam: &BubbleFamily) -> Result<f64> {
    let sigma = FunctionRepr::from_family(fam);
    let us = hs_inner_with_kernel(kernel, u, &sigma)?;
    let ss = hs_inner_with_kernel(kernel, &sigma, &sigma)?;
    Ok(uu - 2.0 * us + ss)
}

fn orthogonality(
    kernel: &PairKernel,
    u: &FunctionRepr,
    fam: &BubbleFamily,
    with_alphas: bool,
    uu: f64,
) -> Result<(Vec<Orthogonality>, f64)> {
    let rho = u.plus_scaled(-1.0, &FunctionRepr::from_family(fam))?;
    let rr = hs_inner_with_kernel(kernel, &rho, &rho)?.max(0.0);
    let floor = rr.sqrt().max(1e-6 * uu.max(0.0).sqrt());
    let (_, modes) = tangent(fam, with_alphas)?;
    let mut out = Vec::new();
    for (i, a, e) in modes {
        if a == 0 && !with_alphas {
            continue;
        }
        let inner = hs_inner_with_kernel(kernel, &rho, &e)?;
        let ee = hs_inner_with_kernel(kernel, &e, &e)?.max(0.0).sqrt();
        out.push(Orthogonality {
            bubble: i,
            a,
            inner,
            normalized: inner.abs() / (ee * floor),
        });
    }
    Ok((out, rr.sqrt()))
}

/// Locally minimises ‖u − Σα_iU[z_i,λ_i]‖²_{Ḣ^s} over (z_i, log λ_i, α_i); α_i = 1
/// when `with_alphas` is false. Nelder–Mead from `init` and seeded perturbations
/// of it, then Gauss–Newton on the best point.
pub fn project_to_manifold(
    u: &FunctionRepr,
    nu: usize,
    init: &BubbleFamily,
    with_alphas: bool,
    spec: &QuadratureSpec,
) -> Result<ProjectionResult> {
    spec.validate()?;
    let amb = u.ambient;
    if init.len() != nu || nu == 0 {
        return Err(Error::Precondition(format!(
            "initial family has {} bubbles, expected {nu}",
            init.len()
        )));
    }
    if init.ambient != amb {
        return Err(Error::Domain("initial family and target live in different ambients".into()));
    }
    let lay = Layout {
        n: amb.n() as usize,
        nu,
        with_alphas,
    };
    let kernel = PairKernel::new(amb, spec);
    let uu = hs_inner_with_kernel(&kernel, u, u)?;
    let start = if with_alphas && init.alphas.is_none() {
        BubbleFamily::new(amb, init.bubbles.clone(), Some(vec![1.0; nu]))?
    } else {
        init.clone()
    };
    let x0 = lay.encode(&start);
    let steps = lay.steps(&start);
    let mut f = |v: &[f64]| match lay.decode(amb, v) {
        Ok(fam) => objective(&kernel, uu, u, &fam).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut trace = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let ftol = 1e-13 * uu.abs().max(1e-300);
    for restart in 0..RESTARTS {
        let xs: Vec<f64> = if restart == 0 {
            x0.clone()
        } else {
            x0.iter().zip(&steps).map(|(x, h)| x + h * rng.gen_range(-1.0..1.0)).collect()
        };
        let mut local = Vec::new();
        let (x, v, it) = nelder_mead(&mut f, &xs, &steps, 400 * x0.len(), ftol, &mut local);
        iterations += it;
        // keep the global trace monotone: only improvements on the incumbent count
        let inc = best.as_ref().map_or(f64::INFINITY, |b| b.1);
        trace.extend(local.into_iter().filter(|t| *t < inc));
        if v < inc {
            best = Some((x, v));
        }
    }
    let (mut x, mut fx) = best.ok_or_else(|| Error::NonConvergence("no restart produced a finite objective".into()))?;
    if !fx.is_finite() {
        return Err(Error::NonConvergence("objective is not finite at any restart".into()));
    }

    // Gauss–Newton polish on the closed-form inner products.
    for _ in 0..60 {
        let fam = lay.decode(amb, &x)?;
        let (ortho, _) = orthogonality(&kernel, u, &fam, with_alphas, uu)?;
        if ortho.iter().all(|o| o.normalized <= 1e-3 * ORTHO_TOL) {
            break;
        }
        let (cols, _) = tangent(&fam, with_alphas)?;
        let rho = u.plus_scaled(-1.0, &FunctionRepr::from_family(&fam))?;
        let k = cols.len();
        let mut g = DMatrix::zeros(k, k);
        let mut b = DVector::zeros(k);
        for i in 0..k {
            b[i] = hs_inner_with_kernel(&kernel, &rho, &cols[i])?;
            for j in 0..=i {
                let v = hs_inner_with_kernel(&kernel, &cols[i], &cols[j])?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let d: Vec<f64> = (0..k).map(|i| g[(i, i)].max(1e-300).sqrt()).collect();
        let eig = scaled_gram_eigen(&g, &d)?;
        let bs = DVector::from_fn(k, |i, _| b[i] / d[i]);
        let step_s = eig.eigenvectors.clone() * DVector::from_fn(k, |i, _| (eig.eigenvectors.column(i).dot(&bs)) / eig.eigenvalues[i]);
        let step: Vec<f64> = (0..k).map(|i| step_s[i] / d[i]).collect();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let xn: Vec<f64> = x.iter().zip(&step).map(|(xi, s)| xi + t * s).collect();
            let fnew = f(&xn);
            if fnew <= fx {
                x = xn;
                fx = fnew;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
        trace.push(fx);
    }

    let fam = lay.decode(amb, &x)?;
    let (cols, _) = tangent(&fam, with_alphas)?;
    let k = cols.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = hs_inner_with_kernel(&kernel, &cols[i], &cols[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let d: Vec<f64> = (0..k).map(|i| g[(i, i)].max(1e-300).sqrt()).collect();
    scaled_gram_eigen(&g, &d)?;
    let (ortho, rn) = orthogonality(&kernel, u, &fam, with_alphas, uu)?;
    let converged = ortho.iter().all(|o| o.normalized <= ORTHO_TOL);
    Ok(ProjectionResult {
        bubbles: fam,
        residual_norm: rn,
        iterations,
        converged,
        orthogonality: ortho,
        trace,
    })
}

/// ‖(−Δ)^s u − u|u|^(p−1)‖ in the homogeneous dual norm, with its error estimate.
pub fn deficit_norm(u: &FunctionRepr, spec: &QuadratureSpec) -> Result<DualNorm> {
    spec.validate()?;
    let amb = u.ambient;
    if u.bubble_terms.is_empty() {
        return Err(Error::Precondition("deficit of an element without bubble terms".into()));
    }
    let support = NormSupport {
        cores: u.bubble_terms.iter().map(|(_, b)| b.clone()).collect(),
        radial: u.radial_center().is_some(),
        decay: amb.n() as f64 + 2.0 * amb.s(),
    };
    neg_sobolev_norm(|x| u.residual_eval(x), &amb, &support, spec)
}

/// Γ(u).
pub fn deficit(u: &FunctionRepr, spec: &QuadratureSpec) -> Result<f64> {
    Ok(deficit_norm(u, spec)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// 2s < n < 6s: rhs = Γ.
    Linear,
    /// n = 6s: rhs = Γ|log Γ|^(1/2).
    Log,
    /// n > 6s: rhs = Γ^(p/2).
    Power,
}

impl Regime {
    pub fn of(amb: &Ambient) -> Self {
        let (n, s) = (amb.n() as f64, amb.s());
        if (n - 6.0 * s).abs() < 1e-12 {
            Regime::Log
        } else if n < 6.0 * s {
            Regime::Linear
        } else {
            Regime::Power
        }
    }

    /// Right side of the stability bound with unit constant.
    pub fn rhs(self, amb: &Ambient, gamma: f64) -> f64 {
        match self {
            Regime::Linear => gamma,
            Regime::Log => gamma * gamma.ln().abs().sqrt(),
            Regime::Power => gamma.powf(0.5 * amb.p()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub separation: f64,
    pub gamma: f64,
    pub gamma_std_error: f64,
    pub q: f64,
    /// Ratio form of the interaction, recorded for comparison only.
    pub q_min_form: f64,
    pub regime: Regime,
    /// Regime right side at Γ with unit constant.
    pub rhs: f64,
    /// Smallest C with Q ≤ C·rhs over the whole sweep.
    pub fitted_constant: f64,
    pub q_over_gamma: f64,
}

/// Two-bubble family for a sweep value: distance at unit scales (cluster) or
/// scale ratio at a common center (tower).
pub fn sweep_family(amb: &Ambient, mode: PairKind, separation: f64) -> Result<BubbleFamily> {
    let n = amb.n();
    let bubbles = match mode {
        PairKind::Cluster => {
            let mut z = vec![0.0; n as usize];
            z[0] = separation;
            vec![Bubble::at_origin(n, 1.0), Bubble::new(z, 1.0)?]
        }
        PairKind::Tower => vec![Bubble::at_origin(n, separation), Bubble::at_origin(n, 1.0)],
    };
    BubbleFamily::new(*amb, bubbles, None)
}

/// Q and Γ for u = U_1 + U_2 along a sweep; points run on separate threads.
pub fn q_gamma_sweep(amb: &Ambient, mode: PairKind, separations: &[f64], spec: &QuadratureSpec) -> Result<Vec<DeficitReport>> {
    let mut fams = Vec::new();
    for &d in separations {
        let fam = sweep_family(amb, mode, d)?;
        let q = family_q(&fam)?;
        if q > 0.01 {
            return Err(Error::Precondition(format!("separation {d} gives Q = {q:.3e} > 0.01")));
        }
        fams.push((d, fam, q));
    }
    let regime = Regime::of(amb);
    let results: Vec<Result<DeficitReport>> = std::thread::scope(|sc| {
        let handles: Vec<_> = fams
            .iter()
            .map(|(d, fam, q)| {
                sc.spawn(move || {
                    let dn = deficit_norm(&FunctionRepr::from_family(fam), spec)?;
                    Ok(DeficitReport {
                        separation: *d,
                        gamma: dn.value,
                        gamma_std_error: dn.std_error,
                        q: *q,
                        q_min_form: family_q_min_form(fam)?,
                        regime,
                        rhs: regime.rhs(amb, dn.value),
                        fitted_constant: f64::NAN,
                        q_over_gamma: q / dn.value,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::NonConvergence("sweep worker panicked".into())))
            })
            .collect()
    });
    let mut reports: Vec<DeficitReport> = results.into_iter().collect::<Result<_>>()?;
    let c = reports.iter().map(|r| r.q / r.rhs).fold(0.0, f64::max);
    reports.iter_mut().for_each(|r| r.fitted_constant = c);
    Ok(reports)
}

/// max/min of Q/Γ over a sweep.
pub fn q_gamma_drift(reports: &[DeficitReport]) -> f64 {
    let hi = reports.iter().map(|r| r.q_over_gamma).fold(f64::MIN, f64::max);
    let lo = reports.iter().map(|r| r.q_over_gamma).fold(f64::MAX, f64::min);
    hi / lo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub center: Vec<f64>,
    pub r_inner: f64,
    pub r_outer: f64,
}

impl CutoffSpec {
    pub fn new(center: Vec<f64>, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !(r_inner > 0.0 && r_outer > r_inner && r_outer.is_finite()) {
            return Err(Error::Domain(format!("cut-off radii need 0 < r < R (got {r_inner}, {r_outer})")));
        }
        Ok(Self { center, r_inner, r_outer })
    }
}

/// 1 on |x| ≤ r, log(R/|x|)/log(R/r) between, 0 beyond R (radial about the center).
pub fn build_cutoff(spec: &CutoffSpec) -> Result<RadialProfile> {
    let CutoffSpec {
        r_inner: a, r_outer: b, ..
    } = *spec;
    if !(a > 0.0 && b > a) {
        return Err(Error::Domain(format!("cut-off radii need 0 < r < R (got {a}, {b})")));
    }
    let l = (b / a).ln();
    let prof = RadialProfile::new(
        move |x| {
            if x <= a {
                1.0
            } else if x >= b {
                0.0
            } else {
                (b / x).ln() / l
            }
        },
        move |x| if x > a && x < b { -1.0 / (l * x) } else { 0.0 },
        move |x| if x > a && x < b { 1.0 / (l * x * x) } else { 0.0 },
        // compactly supported; any exponent above n + 2 keeps far tails at zero
        64.0,
    )?;
    Ok(prof.with_breakpoints(vec![a, b]))
}

/// ∫|(−Δ)^(s/2) φ|^(n/s) for the cut-off with ratio R/r, then a fit of its
/// exponent in log(R/r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub ratios: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: RateFit,
    pub expected_exponent: f64,
}

pub fn cutoff_energy(amb: &Ambient, ratio: f64) -> Result<f64> {
    let (n, s) = (amb.n(), amb.s());
    let (a, b) = (ratio.powf(-0.5), ratio.sqrt());
    let prof = build_cutoff(&CutoffSpec::new(vec![0.0; n as usize], a, b)?)?;
    let t = FracOrder::new(0.5 * s)?;
    let q = n as f64 / s;
    let mut failure = None;
    let v = integrate_radial_tol(
        |r| match fraclap_radial_numeric(&prof, n, t, r) {
            Ok(v) => v.abs().powf(q),
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        n,
        (n as f64 + s) * q,
        &[a, b, 0.5 * a, 2.0 * b],
        Tol::new(0.0, 1e-6, 2000).l1(),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    v
}

pub fn verify_cutoff_gradient_bound(amb: &Ambient, ratios: &[f64]) -> Result<CutoffReport> {
    let (n, s) = (amb.n() as f64, amb.s());
    if !(n > s) {
        return Err(Error::Precondition("need n > s".into()));
    }
    if ratios.len() < 3 || ratios.iter().any(|r| !(*r > 1.0)) {
        return Err(Error::Precondition("need at least three ratios R/r > 1".into()));
    }
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if hi / lo < 100.0 - 1e-9 {
        return Err(Error::Precondition("ratios must span at least two decades".into()));
    }
    let values = std::thread::scope(|sc| {
        let hs: Vec<_> = ratios.iter().map(|&r| sc.spawn(move || cutoff_energy(amb, r))).collect();
        hs.into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::NonConvergence("cut-off worker panicked".into())))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let samples: Vec<(f64, f64)> = ratios.iter().zip(&values).map(|(r, v)| (r.ln(), *v)).collect();
    let fit = fit_models(&samples)?;
    Ok(CutoffReport {
        ratios: ratios.to_vec(),
        values,
        fit,
        expected_exponent: 1.0 - n / s,
    })
}

/// Coefficients (in powers of w = 1/(1+r²)) of the Gegenbauer polynomials
/// C_j^(α)(2w − 1), α = (n−1)/2 (Chebyshev for n = 1), j < k.
fn zonal_coefficients(n: u32, k: usize) -> Vec<Vec<f64>> {
    let alpha = (n as f64 - 1.0) / 2.0;
    // polynomials in t first
    let mut pt: Vec<Vec<f64>> = vec![vec![1.0]];
    if k > 1 {
        pt.push(vec![0.0, if n == 1 { 1.0 } else { 2.0 * alpha }]);
    }
    for j in 2..k {
        let jf = j as f64;
        let (a, b) = if n == 1 {
            (2.0, 1.0)
        } else {
            (2.0 * (jf + alpha - 1.0) / jf, (jf + 2.0 * alpha - 2.0) / jf)
        };
        let mut next = vec![0.0; j + 1];
        for (i, c) in pt[j - 1].iter().enumerate() {
            next[i + 1] += a * c;
        }
        for (i, c) in pt[j - 2].iter().enumerate() {
            next[i] -= b * c;
        }
        pt.push(next);
    }
    // t = 2w − 1
    let mut tpow: Vec<Vec<f64>> = vec![vec![1.0]];
    for i in 1..k {
        let prev = &tpow[i - 1];
        let mut next = vec![0.0; i + 1];
        for (l, c) in prev.iter().enumerate() {
            next[l + 1] += 2.0 * c;
            next[l] -= c;
        }
        tpow.push(next);
    }
    pt.iter()
        .map(|p| {
            let mut w = vec![0.0; p.len()];
            for (i, c) in p.iter().enumerate() {
                for (l, d) in tpow[i].iter().enumerate() {
                    w[l] += c * d;
                }
            }
            w
        })
        .collect()
}

/// Eigenvalues of (−Δ)^s/U^(p−1) restricted to span{(1+r²)^(−m−k) : k < basis_size},
/// ascending, for U = U[0,1]. The span is represented by U·C_j(x_{n+1}) with
/// x_{n+1} = (1−r²)/(1+r²), which keeps the mass matrix well conditioned.
pub fn spectral_gap_radial(amb: &Ambient, basis_size: usize, spec: &QuadratureSpec) -> Result<Vec<f64>> {
    if basis_size < 4 {
        return Err(Error::Precondition(format!("basis_size {basis_size} < 4")));
    }
    let (n, s, m) = (amb.n(), amb.s(), amb.m());
    let t = amb.order();
    let k = basis_size;
    let weight = amb.c_pow_pm1();
    let coef = zonal_coefficients(n, k);
    let value = |j: usize, r: f64| {
        let w = 1.0 / (1.0 + r * r);
        coef[j].iter().enumerate().map(|(l, c)| c * w.powf(m + l as f64)).sum::<f64>()
    };
    let lap = |j: usize, r: f64| -> f64 {
        coef[j]
            .iter()
            .enumerate()
            .map(|(l, c)| {
                if *c == 0.0 {
                    0.0
                } else {
                    c * fraclap_inverse_quadratic(n, t, m + l as f64, r).unwrap_or(f64::NAN)
                }
            })
            .sum()
    };
    let mut a = DMatrix::zeros(k, k);
    let mut b = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let av = integrate_radial(
                |r| 0.5 * (lap(i, r) * value(j, r) + lap(j, r) * value(i, r)),
                n,
                2.0 * n as f64,
                &[1.0],
                spec,
            )?;
            let bv = integrate_radial(
                |r| weight * (1.0 + r * r).powf(-2.0 * s) * value(i, r) * value(j, r),
                n,
                2.0 * n as f64,
                &[1.0],
                spec,
            )?;
            a[(i, j)] = av;
            a[(j, i)] = av;
            b[(i, j)] = bv;
            b[(j, i)] = bv;
        }
    }
    let d: Vec<f64> = (0..k).map(|i| b[(i, i)].sqrt()).collect();
    let bs = DMatrix::from_fn(k, k, |i, j| b[(i, j)] / (d[i] * d[j]));
    let as_ = DMatrix::from_fn(k, k, |i, j| a[(i, j)] / (d[i] * d[j]));
    let be = SymmetricEigen::new(bs);
    let (bmin, bmax) = be
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(bmin > 0.0) || bmax / bmin > 1e12 {
        return Err(Error::IllConditioned(format!(
            "mass matrix condition number {:.3e} exceeds 1e12; use a smaller basis",
            bmax / bmin.max(0.0)
        )));
    }
    let inv_sqrt = &be.eigenvectors * DMatrix::from_diagonal(&be.eigenvalues.map(|v| 1.0 / v.sqrt())) * be.eigenvectors.transpose();
    let c = &inv_sqrt * as_ * &inv_sqrt;
    let c = 0.5 * (&c + c.transpose());
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
