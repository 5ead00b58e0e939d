//! Owen-scrambled Sobol points with independent replicates, and the radial
//! proposal laws used for importance sampling around bubble cores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest number of points one scrambled sequence provides.
pub const MAX_POINTS: usize = 1 << 16;

/// Points of one scrambled replicate in `dim` dimensions, as f64 in (0, 1).
/// The f32 lattice value is jittered below its resolution so that inverse-CDF
/// maps never see exact 0 or 1.
pub struct SobolStream {
    seed: u32,
    dim: u32,
    rng: ChaCha8Rng,
}

impl SobolStream {
    pub fn new(seed: u64, replicate: u32, dim: u32) -> Self {
        let mix = seed ^ (replicate as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        Self {
            seed: (mix ^ (mix >> 32)) as u32,
            dim,
            rng: ChaCha8Rng::seed_from_u64(mix),
        }
    }

    pub fn point(&mut self, index: usize, out: &mut [f64]) {
        debug_assert!(out.len() == self.dim as usize && index < MAX_POINTS);
        for (d, o) in out.iter_mut().enumerate() {
            let u = sobol_burley::sample(index as u32, d as u32, self.seed) as f64;
            let j: f64 = self.rng.gen::<f64>() * (1.0 / 16_777_216.0);
            *o = (u + j).clamp(1e-12, 1.0 - 1e-12);
        }
    }
}

/// Unit vector from n uniforms via the normal inverse CDF.
pub fn direction(us: &[f64], out: &mut [f64]) {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut norm2 = 0.0;
    for (o, &u) in out.iter_mut().zip(us) {
        *o = normal.inverse_cdf(u);
        norm2 += *o * *o;
    }
    let norm = norm2.sqrt().max(1e-300);
    out.iter_mut().for_each(|o| *o /= norm);
}

/// Radial proposal laws on R^n about a center. Densities are with respect to
/// Lebesgue measure on R^n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialLaw {
    /// (λ|x|)^n has survival (1+v)^(-a/n); tail |x|^(-n-a).
    Lomax { lambda: f64, a: f64 },
    /// log |x| uniform on [lo, hi].
    LogUniform { lo: f64, hi: f64 },
}

impl RadialLaw {
    pub fn sample_radius(&self, n: u32, u: f64) -> f64 {
        match *self {
            RadialLaw::Lomax { lambda, a } => {
                let v = (1.0 - u).powf(-(n as f64) / a) - 1.0;
                v.powf(1.0 / n as f64) / lambda
            }
            RadialLaw::LogUniform { lo, hi } => lo * (hi / lo).powf(u),
        }
    }

    pub fn density(&self, n: u32, omega: f64, r: f64) -> f64 {
        let nf = n as f64;
        match *self {
            RadialLaw::Lomax { lambda, a } => lambda.powf(nf) * (a / omega) * (1.0 + (lambda * r).powf(nf)).powf(-1.0 - a / nf),
            RadialLaw::LogUniform { lo, hi } => {
                if r >= lo && r <= hi {
                    r.powf(-nf) / (omega * (hi / lo).ln())
                } else {
                    0.0
                }
            }
        }
    }
}
