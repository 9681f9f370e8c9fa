//! Density estimation with non-parametric exponential families.
//!
//! An exponential family with sufficient statistics `t(x)` is augmented with one
//! kernel feature per observation, `t_a^i(x) = K_H(x^i; x)`, and fitted by
//! maximizing an ℓ1-penalized log-likelihood. The penalty corresponds to a box
//! constraint on how closely the model reproduces the kernel mass around each
//! observation. With a large penalty the fit collapses to the parametric
//! maximum-likelihood estimate; with no penalty it behaves like a kernel density
//! estimate.
//!
//! The same construction applied to exponential random graph models gives the
//! mass-preserving ERGM (NERGM), which keeps probability mass near the observed
//! graph's feature values instead of drifting to near-empty or near-complete
//! graphs.
//!
//! Modules:
//!
//! - [`kernel`]: kernel families and bandwidth scaling.
//! - [`expfam`]: parametric families on a compact support with quadrature.
//! - [`kde`]: kernel density estimation and bandwidth cross-validation.
//! - [`npexp`]: the augmented family and its coordinate-descent fitter.
//! - [`graph`]: graphs, edge/triangle statistics, exact enumeration, goodness of fit.
//! - [`ergm`]: ERGM/NERGM exact fitting, Gibbs sampling and MCMC-MLE.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is off.
//! File formats, experiment drivers and the command-line tool live in the `npef`
//! crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
mod linalg;
mod math;
mod solve1d;

pub mod ergm;
pub mod expfam;
pub mod graph;
pub mod kde;
pub mod kernel;
pub mod npexp;
pub mod quadrature;
pub mod sample;

pub use error::{Error, Result};
pub use math::log_sum_exp;
