//! Low-rank matrix recovery from affine measurements.
//!
//! The crate provides the pieces needed to set up and solve
//! `min F(X) = (1/m) ||y - A(X)||^2  subject to  rank(X) <= r`:
//!
//! * dense matrix primitives and the SVD-based thresholding operators
//!   ([`matrix`], [`svd`], [`subspace`]),
//! * affine measurement maps with full/stochastic/variance-reduced
//!   gradients and subspace-restricted isometry estimates ([`operators`]),
//! * the recovery solvers: a stochastic variance-reduced gradient method
//!   with rank-r hard thresholding (SVRG-ARM) and the SVP, NIHT, StoIHT
//!   and SVT baselines ([`solvers`]),
//! * closed-form convergence constants, admissible step intervals and
//!   runnable checkers for the underlying inequalities ([`theory`]),
//! * synthetic problem generation and image quality metrics
//!   ([`synth`], [`metrics`]).

pub mod error;
pub mod matrix;
pub mod metrics;
pub mod operators;
pub mod rng;
pub mod solvers;
pub mod subspace;
pub mod svd;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use svd::{hard_threshold_rank, soft_threshold_singular, svd, SvdFactors};
