//! Adaptive Gauss-Kronrod (10/21-point) quadrature on finite intervals.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_478_936,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
    /// Measure `rel` against ∫|f| instead of |∫f|; for integrands that cancel.
    pub rel_to_l1: bool,
}

impl Tol {
    pub fn new(abs: f64, rel: f64, max_intervals: usize) -> Self {
        Self {
            abs,
            rel,
            max_intervals,
            rel_to_l1: false,
        }
    }

    pub fn l1(mut self) -> Self {
        self.rel_to_l1 = true;
        self
    }
}

impl Default for Tol {
    fn default() -> Self {
        Self::new(1e-14, 1e-10, 2000)
    }
}

/// One 21-point Kronrod rule on [a, b]: (kronrod value, error estimate, ∫|f| estimate).
pub fn qk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[10] * fc;
    let mut resg = 0.0;
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = resk * h;
    let resabs = resabs * h.abs();
    let resasc = resasc * h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err, resabs)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    l1: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive integration of `f` over the panels defined by sorted `points`
/// (at least two). The interval with the largest error is bisected until the total
/// error meets max(abs, rel * |value|).
pub fn integrate_panels<F: FnMut(f64) -> f64>(mut f: F, points: &[f64], tol: Tol) -> Result<Estimate> {
    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut l1 = 0.0;
    let mut evals = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (v, e, l) = qk21(&mut f, a, b);
        evals += 21;
        value += v;
        error += e;
        l1 += l;
        heap.push(Piece {
            a,
            b,
            value: v,
            error: e,
            l1: l,
        });
    }
    let mut count = heap.len();
    loop {
        if !value.is_finite() {
            return Err(Error::NonConvergence("non-finite integrand value".into()));
        }
        let scale = if tol.rel_to_l1 { l1 } else { value.abs() };
        if error <= tol.abs.max(tol.rel * scale) {
            return Ok(Estimate { value, error, evals });
        }
        let Some(worst) = heap.pop() else {
            return Ok(Estimate { value, error, evals });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at machine resolution; accept what we have
            heap.push(worst);
            return Ok(Estimate { value, error, evals });
        }
        if count >= tol.max_intervals {
            return Err(Error::NonConvergence(format!(
                "adaptive quadrature exceeded {} intervals (value {value:.6e}, error {error:.3e})",
                tol.max_intervals
            )));
        }
        let (v1, e1, l1a) = qk21(&mut f, worst.a, mid);
        let (v2, e2, l1b) = qk21(&mut f, mid, worst.b);
        evals += 42;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        l1 += l1a + l1b - worst.l1;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            l1: l1a,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            l1: l1b,
        });
        count += 1;
        if count % 64 == 0 {
            // resum to shed accumulated rounding in the running totals
            value = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
            l1 = heap.iter().map(|p| p.l1).sum();
        }
    }
}

/// Integrate over [a, b].
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: Tol) -> Result<Estimate> {
    integrate_panels(f, &[a, b], tol)
}

/// Sorted, deduplicated panel points in [a, b] from a set of candidate breakpoints.
pub fn panel_points(a: f64, b: f64, extra: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = extra.into_iter().filter(|x| x.is_finite() && *x > a && *x < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * x.abs().max(y.abs()));
    pts
}

/// Geometric points start, start*ratio, ... strictly below stop.
pub fn geometric(start: f64, stop: f64, ratio: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut x = start;
    while x < stop {
        v.push(x);
        x *= ratio;
    }
    v
}
