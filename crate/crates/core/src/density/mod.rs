//! The log-density contract and its backends.
//!
//! A [`DensityBackend`] turns a dataset and a noise magnitude `δ` into a
//! [`LogDensity`] model. Analytic backends read the dataset's originating
//! [`ManifoldSpec`](crate::manifolds::ManifoldSpec) and return the exact
//! perturbed density; trainable backends fit the perturbed sample.

pub mod analytic;
mod backend;
pub mod gaussian_fit;
pub mod quadrature;
pub mod special;

pub use analytic::{
    log_density_box_conv, log_density_gaussian_conv, log_density_point_set, GaussianConvModel,
};
pub use backend::{build_backend, BackendConfig};
pub use gaussian_fit::{fit_gaussian_log_density, GaussianFit, Ridge};
pub use quadrature::{log_density_quadrature, log_density_sphere, QuadratureSpec};

use crate::manifolds::Dataset;
use crate::Result;

/// A prepared density model. Evaluation is deterministic and thread-safe.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// `log ρ(x)`; `-∞` is a valid answer.
    fn log_density(&self, x: &[f64]) -> Result<f64>;
}

/// Builds one density model per noise magnitude.
pub trait DensityBackend: Send + Sync {
    fn id(&self) -> &'static str;

    /// Whether `prepare` expects the sample already perturbed at `δ`. Analytic
    /// backends and the KDE take clean data and convolve exactly.
    fn fits_perturbed_data(&self) -> bool;

    fn prepare(&self, data: &Dataset, delta: f64, seed: u64) -> Result<Box<dyn LogDensity>>;
}
