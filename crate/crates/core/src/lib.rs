//! Adaptive top-k L-statistic tests for high-dimensional regression
//! coefficients.
//!
//! The test of `H₀: β_b = 0` in `Y = X_a β_a + X_b β_b + ε` ranks the
//! squared standardized scores `W_j` of the residualized signal columns and
//! sums the top `k` of them. [`calibrate`] approximates the null law of the
//! whole family `{L_k}` with one Rademacher wild-bootstrap run,
//! [`adaptive`] combines a dyadic grid of `k` by a Cauchy combination, and
//! [`asymptotic`] carries the closed-form extreme-value limits and the
//! moment machinery of the diverging-`k` regime.
//!
//! Numeric kernels are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the double-precision instantiations used by the experiment
//! harness.

// `!(x >= t)` is deliberate throughout: it also catches NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod asymptotic;
pub mod calibrate;
pub mod competitors;
pub mod error;
pub mod linalg;
pub mod parallel;
pub mod randgen;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod statcore;

pub use error::{Error, Result};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type CovarianceSpec64 = randgen::CovarianceSpec<f64>;
pub type CovarianceFactor64 = randgen::CovarianceFactor<f64>;
pub type CoefficientSpec64 = randgen::CoefficientSpec<f64>;
pub type Dataset64 = randgen::Dataset<f64>;
pub type DesignConfig64 = randgen::DesignConfig<f64>;
pub type ResidualizedDesign64 = statcore::ResidualizedDesign<f64>;
pub type ResidualizedDesign32 = statcore::ResidualizedDesign<f32>;
pub type ScoreStats64 = statcore::ScoreStats<f64>;
pub type OrderedEvidence64 = statcore::OrderedEvidence<f64>;
pub type BootstrapResult64 = calibrate::BootstrapResult<f64>;
pub type DriftSummary64 = asymptotic::DriftSummary<f64>;
