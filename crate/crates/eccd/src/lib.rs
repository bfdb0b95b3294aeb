//! Elastic-net penalized generalized linear models, fit by cyclic coordinate
//! descent with block-unrolled gradient correction.
//!
//! The solver minimizes
//!
//! ```text
//!   L(beta) = -(1/n) sum_i [y_i theta_i - F(theta_i)] / d(tau)
//!             + lambda * ((1 - alpha)/2 * ||beta||_2^2 + alpha * ||beta||_1)
//! ```
//!
//! where `theta_i = beta0 + x_i . beta` and F is the cumulant function of an
//! exponential family. Three update engines share one coordinate kernel:
//! classical cyclic coordinate descent (`cd`), naive block coordinate descent
//! with stale gradients (`bcd`), and block-unrolled descent that corrects the
//! stale gradient with a first-order Taylor term (`eccd`). Regularization
//! paths combine warm starts, sequential strong-rule screening, and KKT
//! recovery passes.

pub mod data;
pub mod error;
pub mod families;
pub mod kernels;
pub mod oracle;
pub mod path;
pub mod solvers;
pub mod timing;

pub use error::{EccdError, Result};
pub use families::{Family, FamilySpec};
