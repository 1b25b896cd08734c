//! Closed-form perturbed densities.

use ndarray::ArrayView2;

use super::special::{log_diff_ndtr, log_normal_pdf, LN_2PI};
use crate::{Error, Result};

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")))
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// `log N(x; 0, diag(σ² + δ²))`, the density of `N(0, diag σ²)` convolved
/// with `N(0, δ²I)`. Zero entries in `sigmas` are allowed and describe
/// directions normal to the support.
pub fn log_density_gaussian_conv(sigmas: &[f64], delta: f64, x: &[f64]) -> Result<f64> {
    check_delta(delta)?;
    check_dim(sigmas.len(), x.len())?;
    let d2 = delta * delta;
    Ok(sigmas
        .iter()
        .zip(x)
        .map(|(s, xi)| log_normal_pdf(*xi, s * s + d2))
        .sum())
}

/// Perturbed diagonal Gaussian with an explicit mean.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianConvModel {
    pub sigmas: Vec<f64>,
    pub delta: f64,
    pub mean: Vec<f64>,
}

impl GaussianConvModel {
    pub fn new(sigmas: Vec<f64>, delta: f64, mean: Vec<f64>) -> Result<Self> {
        check_delta(delta)?;
        check_dim(sigmas.len(), mean.len())?;
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidArgument("sigmas must be finite and ≥ 0".into()));
        }
        Ok(GaussianConvModel {
            sigmas,
            delta,
            mean,
        })
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.mean.len(), x.len())?;
        let d2 = self.delta * self.delta;
        Ok(self
            .sigmas
            .iter()
            .zip(x.iter().zip(&self.mean))
            .map(|(s, (xi, mi))| log_normal_pdf(xi - mi, s * s + d2))
            .sum())
    }
}

/// `log` of the uniform density on the box `Π [lows_k, highs_k]` convolved
/// with `N(0, δ²I)`; the product separates per axis into normal-CDF
/// differences evaluated in log space.
pub fn log_density_box_conv(lows: &[f64], highs: &[f64], delta: f64, x: &[f64]) -> Result<f64> {
    check_delta(delta)?;
    check_dim(lows.len(), highs.len())?;
    check_dim(lows.len(), x.len())?;
    let mut total = 0.0;
    for ((&lo, &hi), &xi) in lows.iter().zip(highs).zip(x) {
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!("box edge needs low < high, got [{lo}, {hi}]")));
        }
        total += log_diff_ndtr((xi - lo) / delta, (xi - hi) / delta) - (hi - lo).ln();
    }
    Ok(total)
}

/// `log((1/m) Σ_k φ_δ^D(x − p_k))`: the exact perturbed density of a uniform
/// measure on the atoms `p_k`, and a Gaussian KDE with bandwidth `δ`.
pub fn log_density_point_set(points: ArrayView2<f64>, delta: f64, x: &[f64]) -> Result<f64> {
    check_delta(delta)?;
    let m = points.nrows();
    if m == 0 {
        return Err(Error::InvalidArgument("point set is empty".into()));
    }
    let d = points.ncols();
    check_dim(d, x.len())?;
    let inv = -0.5 / (delta * delta);
    let exps: Vec<f64> = points
        .rows()
        .into_iter()
        .map(|p| inv * p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .collect();
    let norm = -(d as f64) * (delta.ln() + 0.5 * LN_2PI) - (m as f64).ln();
    Ok(super::special::logsumexp(&exps) + norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gaussian_conv_at_origin() {
        let want = -5.0 * LN_2PI - 5.0 * 1.0025f64.ln();
        let got = log_density_gaussian_conv(&[1.0; 10], 0.05, &[0.0; 10]).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn gaussian_conv_vanishing_noise() {
        let got = log_density_gaussian_conv(&[1.0], 1e-8, &[0.0]).unwrap();
        assert!((got + 0.5 * LN_2PI).abs() < 1e-6);
    }

    #[test]
    fn gaussian_conv_slope_matches_finite_difference() {
        // d log ρ_δ(0) / d log δ = −Σ δ²/(σ²+δ²)
        let f = |ld: f64| log_density_gaussian_conv(&[1.0; 10], ld.exp(), &[0.0; 10]).unwrap();
        let ld = 0.05f64.ln();
        let h = 1e-5;
        let fd = (f(ld + h) - f(ld - h)) / (2.0 * h);
        let closed = -10.0 * 0.0025 / 1.0025;
        assert!((fd - closed).abs() < 1e-8);
        assert!((closed - (-0.024_937_655_860_349_13)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_conv_rejects_mismatch() {
        assert!(matches!(
            log_density_gaussian_conv(&[1.0; 3], 0.1, &[0.0; 2]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(log_density_gaussian_conv(&[1.0], 0.0, &[0.0]).is_err());
    }

    #[test]
    fn gaussian_model_with_mean() {
        let m = GaussianConvModel::new(vec![1.0, 0.0], 0.5, vec![2.0, -1.0]).unwrap();
        let a = m.log_density(&[2.5, -1.0]).unwrap();
        let b = log_density_gaussian_conv(&[1.0, 0.0], 0.5, &[0.5, 0.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn box_interior_and_boundary() {
        let interior = log_density_box_conv(&[0.0], &[1.0], 0.05, &[0.5]).unwrap();
        assert!(interior.abs() < 1e-12 && interior < 0.0);
        let edge = log_density_box_conv(&[0.0], &[1.0], 0.05, &[0.0]).unwrap();
        assert!((edge - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn box_far_tail_is_finite() {
        let v = log_density_box_conv(&[0.0], &[1.0], 0.01, &[-0.5]).unwrap();
        // the mass is Φ(−50) − Φ(−150), dominated by the first term
        assert!(v.is_finite());
        assert!((v - super::super::special::log_ndtr(-50.0)).abs() < 1e-10);
    }

    #[test]
    fn box_thousand_dims_separates() {
        let d = 1000;
        let one = log_density_box_conv(&[0.0], &[1.0], 0.05, &[0.5]).unwrap();
        let many = log_density_box_conv(&vec![0.0; d], &vec![1.0; d], 0.05, &vec![0.5; d]).unwrap();
        assert!(many.is_finite());
        assert!(((many - d as f64 * one) / many).abs() < 1e-12);
    }

    #[test]
    fn box_rejects_inverted_edges() {
        assert!(log_density_box_conv(&[1.0], &[1.0], 0.1, &[0.5]).is_err());
    }

    #[test]
    fn point_set_two_atoms() {
        let pts = array![[0.0], [1.0]];
        let delta: f64 = 0.1;
        let got = log_density_point_set(pts.view(), delta, &[0.0]).unwrap();
        let eps = (-50.0f64).exp();
        let want = -(2f64.ln()) - delta.ln() - 0.5 * LN_2PI + eps.ln_1p();
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn point_set_single_atom() {
        let pts = array![[1.0, 2.0, 3.0]];
        let got = log_density_point_set(pts.view(), 0.3, &[1.0, 2.0, 3.0]).unwrap();
        let want = -3.0 * 0.3f64.ln() - 1.5 * LN_2PI;
        assert!((got - want).abs() < 1e-13);
        let empty = ndarray::Array2::<f64>::zeros((0, 3));
        assert!(log_density_point_set(empty.view(), 0.3, &[0.0; 3]).is_err());
    }
}
