//! Numerical integration: adaptive 1D rules, radial and two-center reductions,
//! quasi-Monte Carlo, Ḣ^s inner products and the dual (Riesz) norm.

pub mod gk;
pub mod inner;
pub mod qmc;
pub mod radial;
pub mod riesz;
pub mod two_center;

pub use inner::{hs_inner, hs_inner_invariant, hs_inner_with_kernel, FunctionRepr, PairKernel};
pub use radial::integrate_radial;
pub use riesz::{neg_sobolev_norm, riesz_constant, DualNorm, NormPath, NormSupport};
pub use two_center::{integrate_two_center, integrate_two_center_geo, TwoCenterGeometry};

use crate::error::{Error, Result};
use crate::specfun::gamma;
use serde::{Deserialize, Serialize};

/// Tolerances and sampling budget shared by all integration paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_refinements: usize,
    pub qmc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-15,
            rel_tol: 1e-10,
            max_refinements: 4000,
            qmc_samples: 1 << 16,
            seed: 0x5eed,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.qmc_samples < 1024 {
            return Err(Error::Config(format!("qmc_samples = {} below 1024", self.qmc_samples)));
        }
        if self.max_refinements == 0 {
            return Err(Error::Config("max_refinements must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn tol(&self) -> gk::Tol {
        gk::Tol::new(self.abs_tol, self.rel_tol, self.max_refinements)
    }
}

/// Surface area of the unit sphere S^{n-1} in R^n (2 for n = 1).
pub fn sphere_area(n: u32) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h).expect("n >= 1")
}
