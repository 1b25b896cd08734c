use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Error statistics of LID estimates against ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `mean(est − true) / mean(true)`.
    pub relative_bias: f64,
    /// `mean(|est − true|) / mean(true)`.
    pub relative_mae: f64,
    /// Sample standard deviation of the per-run mean estimates.
    pub std: f64,
    /// `false` when the mean truth is zero and the two errors above are
    /// absolute rather than relative.
    pub normalized: bool,
    pub count: usize,
}

/// Metrics for a single run.
pub fn compute_metrics(estimates: &[f64], truths: &[f64]) -> Result<Metrics> {
    compute_run_metrics(&[(estimates, truths)])
}

/// Pools every `(estimates, truths)` run for bias and MAE.
pub fn compute_run_metrics(runs: &[(&[f64], &[f64])]) -> Result<Metrics> {
    let mut sum_err = 0.0;
    let mut sum_abs = 0.0;
    let mut sum_true = 0.0;
    let mut count = 0usize;
    let mut run_means = Vec::with_capacity(runs.len());
    for (est, truth) in runs {
        if est.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: est.len(),
            });
        }
        if est.iter().chain(truth.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("metrics input is not finite".into()));
        }
        for (e, t) in est.iter().zip(truth.iter()) {
            sum_err += e - t;
            sum_abs += (e - t).abs();
            sum_true += t;
        }
        count += est.len();
        if !est.is_empty() {
            run_means.push(est.iter().sum::<f64>() / est.len() as f64);
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument("no estimates to score".into()));
    }
    let n = count as f64;
    let mean_true = sum_true / n;
    let normalized = mean_true != 0.0;
    let scale = if normalized { mean_true } else { 1.0 };
    Ok(Metrics {
        relative_bias: sum_err / n / scale,
        relative_mae: sum_abs / n / scale,
        std: sample_std(&run_means),
        normalized,
        count,
    })
}

pub(crate) fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let m = compute_metrics(&[1.9, 2.1], &[2.0, 2.0]).unwrap();
        assert!(m.relative_bias.abs() < 1e-15);
        assert!((m.relative_mae - 0.05).abs() < 1e-15);
        let z = compute_metrics(&[0.0; 3], &[0.0; 3]).unwrap();
        assert!(!z.normalized);
        assert_eq!(z.relative_bias, 0.0);
        assert!(compute_metrics(&[], &[]).is_err());
        assert!(compute_metrics(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn std_of_run_means() {
        let a = [1.0, 3.0];
        let b = [4.0, 4.0];
        let t = [2.0, 2.0];
        let m = compute_run_metrics(&[(&a, &t), (&b, &t)]).unwrap();
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.relative_bias - 0.5).abs() < 1e-15);
    }
}
