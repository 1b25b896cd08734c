use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::analytic::{log_density_box_conv, log_density_point_set};
use super::gaussian_fit::{fit_gaussian_log_density, Ridge};
use super::quadrature::{self, QuadratureSpec, DEFAULT_MAX_PANELS, DEFAULT_TOL};
use super::special::log_normal_pdf;
use super::{DensityBackend, LogDensity};
use crate::flow::{train_maf, TrainConfig};
use crate::manifolds::{Dataset, ManifoldKind, ManifoldSpec};
use crate::{Error, Result};

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_panels() -> usize {
    DEFAULT_MAX_PANELS
}

/// Backend selection as it appears in run configs, keyed by `id`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum BackendConfig {
    GaussianConv,
    BoxConv,
    PointSet,
    Quadrature {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_panels")]
        max_panels: usize,
    },
    GaussianFit {
        #[serde(default)]
        ridge: Ridge,
    },
    Kde,
    Maf(TrainConfig),
}

impl BackendConfig {
    pub fn id(&self) -> &'static str {
        match self {
            BackendConfig::GaussianConv => "gaussian_conv",
            BackendConfig::BoxConv => "box_conv",
            BackendConfig::PointSet => "point_set",
            BackendConfig::Quadrature { .. } => "quadrature",
            BackendConfig::GaussianFit { .. } => "gaussian_fit",
            BackendConfig::Kde => "kde",
            BackendConfig::Maf(_) => "maf",
        }
    }

    /// The analytic oracle that is exact for `spec`, if any.
    pub fn oracle_for(spec: &ManifoldSpec) -> Option<BackendConfig> {
        match &spec.kind {
            ManifoldKind::GaussianDiag { .. } | ManifoldKind::GaussianEmbeddedDuplicated { .. } => {
                Some(BackendConfig::GaussianConv)
            }
            ManifoldKind::UniformInterval { .. } | ManifoldKind::UniformHypercube { .. } => {
                Some(BackendConfig::BoxConv)
            }
            ManifoldKind::UniformRectangle { .. } => Some(BackendConfig::BoxConv),
            ManifoldKind::PointsOnLine { .. } => Some(BackendConfig::PointSet),
            ManifoldKind::SphereUniform { .. } => Some(BackendConfig::quadrature()),
            _ => spec.charts().map(|_| BackendConfig::quadrature()),
        }
    }

    pub fn quadrature() -> BackendConfig {
        BackendConfig::Quadrature {
            tol: DEFAULT_TOL,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

/// Instantiates the backend named by `config`.
pub fn build_backend(config: &BackendConfig) -> Box<dyn DensityBackend> {
    match config {
        BackendConfig::GaussianConv
        | BackendConfig::BoxConv
        | BackendConfig::PointSet
        | BackendConfig::Quadrature { .. } => Box::new(Analytic {
            config: config.clone(),
        }),
        BackendConfig::GaussianFit { ridge } => Box::new(GaussianFitBackend { ridge: *ridge }),
        BackendConfig::Kde => Box::new(KdeBackend),
        BackendConfig::Maf(cfg) => Box::new(MafBackend { config: cfg.clone() }),
    }
}

struct Analytic {
    config: BackendConfig,
}

enum Oracle {
    Gaussian { sigmas: Vec<f64> },
    Duplicated { d: usize },
    Box { lows: Vec<f64>, highs: Vec<f64> },
    Points { points: Arc<Array2<f64>> },
    Quadrature { q: QuadratureSpec },
    Sphere { d: usize, tol: f64 },
}

struct AnalyticModel {
    oracle: Oracle,
    delta: f64,
    dim: usize,
}

impl DensityBackend for Analytic {
    fn id(&self) -> &'static str {
        self.config.id()
    }

    fn fits_perturbed_data(&self) -> bool {
        false
    }

    fn prepare(&self, data: &Dataset, delta: f64, _seed: u64) -> Result<Box<dyn LogDensity>> {
        let spec = data.spec.as_ref().ok_or_else(|| {
            Error::InvalidSpec(format!("backend {} needs the dataset's manifold spec", self.id()))
        })?;
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let unsupported = || {
            Error::InvalidSpec(format!("backend {} has no closed form for {:?}", self.id(), spec.kind))
        };
        let oracle = match (&self.config, &spec.kind) {
            (BackendConfig::GaussianConv, ManifoldKind::GaussianDiag { sigmas }) => Oracle::Gaussian {
                sigmas: sigmas.clone(),
            },
            (BackendConfig::GaussianConv, ManifoldKind::GaussianEmbeddedDuplicated { d }) => {
                Oracle::Duplicated { d: *d }
            }
            (BackendConfig::BoxConv, ManifoldKind::UniformInterval { a, b }) => Oracle::Box {
                lows: vec![*a],
                highs: vec![*b],
            },
            (BackendConfig::BoxConv, ManifoldKind::UniformHypercube { d }) => Oracle::Box {
                lows: vec![0.0; *d],
                highs: vec![1.0; *d],
            },
            (BackendConfig::BoxConv, ManifoldKind::UniformRectangle { edge_lengths }) => Oracle::Box {
                lows: vec![0.0; edge_lengths.len()],
                highs: edge_lengths.clone(),
            },
            (BackendConfig::PointSet, ManifoldKind::PointsOnLine { positions, .. }) => {
                let mut points = Array2::zeros((positions.len(), spec.ambient_dim));
                for (k, p) in positions.iter().enumerate() {
                    points[(k, 0)] = *p;
                }
                Oracle::Points {
                    points: Arc::new(points),
                }
            }
            (BackendConfig::Quadrature { tol, .. }, ManifoldKind::SphereUniform { d }) => {
                Oracle::Sphere { d: *d, tol: *tol }
            }
            (BackendConfig::Quadrature { tol, max_panels }, _) => Oracle::Quadrature {
                q: QuadratureSpec::from_manifold(spec)?.with_tolerance(*tol, *max_panels)?,
            },
            _ => return Err(unsupported()),
        };
        Ok(Box::new(AnalyticModel {
            oracle,
            delta,
            dim: spec.ambient_dim,
        }))
    }
}

impl LogDensity for AnalyticModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let delta = self.delta;
        let d2 = delta * delta;
        // coordinates past the oracle's own ones are normal to the support
        let padding = |from: usize| -> f64 { x[from..].iter().map(|v| log_normal_pdf(*v, d2)).sum() };
        match &self.oracle {
            Oracle::Gaussian { sigmas } => {
                let k = sigmas.len();
                let own: f64 = sigmas
                    .iter()
                    .zip(x)
                    .map(|(s, xi)| log_normal_pdf(*xi, s * s + d2))
                    .sum();
                Ok(own + padding(k))
            }
            Oracle::Duplicated { d } => {
                let d = *d;
                let mut total = 0.0;
                for k in 0..d {
                    let u = (x[k] + x[k + d]) * FRAC_1_SQRT_2;
                    let v = (x[k] - x[k + d]) * FRAC_1_SQRT_2;
                    total += log_normal_pdf(u, 2.0 + d2) + log_normal_pdf(v, d2);
                }
                Ok(total + padding(2 * d))
            }
            Oracle::Box { lows, highs } => {
                let k = lows.len();
                Ok(log_density_box_conv(lows, highs, delta, &x[..k])? + padding(k))
            }
            Oracle::Points { points } => log_density_point_set(points.view(), delta, x),
            Oracle::Quadrature { q } => quadrature::log_density_quadrature(q, delta, x),
            Oracle::Sphere { d, tol } => quadrature::log_density_sphere(*d, self.dim, delta, x, *tol),
        }
    }
}

struct GaussianFitBackend {
    ridge: Ridge,
}

impl DensityBackend for GaussianFitBackend {
    fn id(&self) -> &'static str {
        "gaussian_fit"
    }

    fn fits_perturbed_data(&self) -> bool {
        true
    }

    fn prepare(&self, data: &Dataset, _delta: f64, _seed: u64) -> Result<Box<dyn LogDensity>> {
        Ok(Box::new(fit_gaussian_log_density(data, self.ridge)?))
    }
}

/// Gaussian KDE with bandwidth `δ`: the exact perturbed density of the
/// empirical measure.
struct KdeBackend;

struct KdeModel {
    points: Array2<f64>,
    delta: f64,
}

impl DensityBackend for KdeBackend {
    fn id(&self) -> &'static str {
        "kde"
    }

    fn fits_perturbed_data(&self) -> bool {
        false
    }

    fn prepare(&self, data: &Dataset, delta: f64, _seed: u64) -> Result<Box<dyn LogDensity>> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("KDE needs at least one point".into()));
        }
        Ok(Box::new(KdeModel {
            points: data.points.clone(),
            delta,
        }))
    }
}

impl LogDensity for KdeModel {
    fn dim(&self) -> usize {
        self.points.ncols()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        log_density_point_set(self.points.view(), self.delta, x)
    }
}

struct MafBackend {
    config: TrainConfig,
}

impl DensityBackend for MafBackend {
    fn id(&self) -> &'static str {
        "maf"
    }

    fn fits_perturbed_data(&self) -> bool {
        true
    }

    fn prepare(&self, data: &Dataset, _delta: f64, seed: u64) -> Result<Box<dyn LogDensity>> {
        let config = TrainConfig {
            seed,
            ..self.config.clone()
        };
        Ok(Box::new(train_maf(data, &config)?))
    }
}
