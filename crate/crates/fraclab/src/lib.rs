#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod appendix_suite;
pub mod bubbles;
pub mod error;
pub mod fraclap;
pub mod quadrature;
pub mod specfun;
pub mod stability_lab;
pub mod weights;

pub use error::{Error, Result};
