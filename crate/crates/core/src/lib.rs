//! Local intrinsic dimension (LID) estimation from approximate likelihoods.
//!
//! The estimator perturbs a dataset with isotropic Gaussian noise at several
//! magnitudes `δ`, models the perturbed density at each magnitude, and regresses
//! `log ρ_δ(x)` against `log δ`. For a point on a `d`-dimensional manifold in
//! `R^D` the slope approaches `d - D` as `δ → 0`, so `d̂ = D + slope`.
//!
//! Modules:
//!
//! - [`manifolds`]: synthetic datasets with known per-point LID.
//! - [`density`]: the pluggable log-density contract, exact analytic oracles,
//!   adaptive log-space quadrature and a Gaussian fit.
//! - [`flow`]: a masked autoregressive flow trained from scratch.
//! - [`lidl`]: perturbation, regression and the estimator itself.
//! - [`baselines`]: nearest-neighbour estimators (MLE, TwoNN, local PCA).
//! - [`harness`]: experiment configs, metrics, δ-sweeps and CSV reports.

pub mod baselines;
pub mod density;
pub mod error;
pub mod flow;
pub mod harness;
pub mod lidl;
pub mod manifolds;
mod rng;

pub use error::{Error, Result};
