//! Maximum-likelihood full-covariance Gaussian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::LN_2PI;
use super::LogDensity;
use crate::manifolds::Dataset;
use crate::{Error, Result};

/// Diagonal loading added to the sample covariance before factorisation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Ridge {
    /// `1e-9 · trace(Σ̂) / D`.
    #[default]
    Relative,
    Fixed(f64),
    None,
}

/// A fitted `N(μ, Σ̂ + εI)`.
#[derive(Clone, Debug)]
pub struct GaussianFit {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub ridge: f64,
    chol_l: DMatrix<f64>,
    log_det: f64,
}

/// Fits mean and (biased, maximum-likelihood) covariance to `data`.
pub fn fit_gaussian_log_density(data: &Dataset, ridge: Ridge) -> Result<GaussianFit> {
    let n = data.len();
    let d = data.dim();
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("cannot fit a Gaussian to an empty dataset".into()));
    }
    let x = DMatrix::from_row_iterator(n, d, data.points.iter().copied());
    let mean = DVector::from_iterator(d, (0..d).map(|j| x.column(j).mean()));
    let mut centred = x;
    for j in 0..d {
        let m = mean[j];
        centred.column_mut(j).add_scalar_mut(-m);
    }
    let covariance = centred.tr_mul(&centred) / n as f64;
    let eps = match ridge {
        Ridge::Relative => 1e-9 * covariance.trace() / d as f64,
        Ridge::Fixed(e) if e >= 0.0 && e.is_finite() => e,
        Ridge::Fixed(e) => return Err(Error::InvalidArgument(format!("ridge must be ≥ 0, got {e}"))),
        Ridge::None => 0.0,
    };
    let mut loaded = covariance.clone();
    for j in 0..d {
        loaded[(j, j)] += eps;
    }
    let floor = 1e-12 * loaded.trace() / d as f64;
    let chol = loaded.cholesky().ok_or_else(|| {
        Error::SingularCovariance(format!("covariance of {n} points in R^{d} is not positive definite"))
    })?;
    let chol_l = chol.l();
    if chol_l.diagonal().iter().any(|p| !(p * p > floor)) {
        return Err(Error::SingularCovariance(format!(
            "covariance of {n} points in R^{d} is numerically singular"
        )));
    }
    let log_det = 2.0 * chol_l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(GaussianFit {
        mean,
        covariance,
        ridge: eps,
        chol_l,
        log_det,
    })
}

impl LogDensity for GaussianFit {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let diff = DVector::from_iterator(d, x.iter().zip(self.mean.iter()).map(|(a, m)| a - m));
        let z = self
            .chol_l
            .solve_lower_triangular(&diff)
            .ok_or_else(|| Error::SingularCovariance("triangular solve failed".into()))?;
        Ok(-0.5 * (d as f64 * LN_2PI + self.log_det + z.norm_squared()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::analytic::log_density_point_set;
    use crate::manifolds::{generate, ManifoldKind, ManifoldSpec};
    use ndarray::Array2;

    #[test]
    fn standard_normal_at_origin() {
        let spec = ManifoldSpec::new(ManifoldKind::GaussianDiag {
            sigmas: vec![1.0, 1.0],
        });
        let data = generate(&spec, 100_000, 3).unwrap();
        let fit = fit_gaussian_log_density(&data, Ridge::default()).unwrap();
        let v = fit.log_density(&[0.0, 0.0]).unwrap();
        assert!((v + LN_2PI).abs() < 0.02);
    }

    #[test]
    fn repeated_point_with_ridge_is_a_kernel() {
        let delta: f64 = 0.07;
        let pts = Array2::from_shape_fn((50, 3), |(_, j)| j as f64 - 1.0);
        let data = Dataset::from_points(pts.clone()).unwrap();
        let fit = fit_gaussian_log_density(&data, Ridge::Fixed(delta * delta)).unwrap();
        let x = [-0.95, 0.1, 0.98];
        let a = fit.log_density(&x).unwrap();
        let b = log_density_point_set(pts.slice(ndarray::s![0..1, ..]), delta, &x).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn singular_without_ridge() {
        let pts = Array2::from_shape_fn((20, 2), |(i, _)| i as f64);
        let data = Dataset::from_points(pts).unwrap();
        assert!(matches!(
            fit_gaussian_log_density(&data, Ridge::None),
            Err(Error::SingularCovariance(_))
        ));
        fit_gaussian_log_density(&data, Ridge::Relative).unwrap();
    }
}
