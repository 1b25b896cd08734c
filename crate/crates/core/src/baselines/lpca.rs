use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::index::{Neighbor, NeighborIndex};
use crate::{Error, Result};

/// How many local covariance eigenvalues count as signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `λ_i > α · λ_max`.
    FukunagaOlsen { alpha: f64 },
    /// Fewest leading eigenvalues explaining `fraction` of the variance.
    ExplainedVariance { fraction: f64 },
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::FukunagaOlsen { alpha: 0.05 }
    }
}

impl ThresholdRule {
    /// Applies the rule to eigenvalues sorted in decreasing order.
    pub fn count(&self, eig: &[f64]) -> usize {
        let max = eig.first().copied().unwrap_or(0.0);
        if !(max > 0.0) {
            return 0;
        }
        match *self {
            ThresholdRule::FukunagaOlsen { alpha } => eig.iter().filter(|&&l| l > alpha * max).count(),
            ThresholdRule::ExplainedVariance { fraction } => {
                let total: f64 = eig.iter().filter(|l| **l > 0.0).sum();
                let mut acc = 0.0;
                for (i, l) in eig.iter().enumerate() {
                    acc += l.max(0.0);
                    if acc >= fraction * total {
                        return i + 1;
                    }
                }
                eig.len()
            }
        }
    }
}

/// Local PCA dimension over the `k` nearest neighbors of `x`.
///
/// Eigenvalues come from whichever of the `k × k` Gram matrix or the
/// `D × D` covariance is smaller; both share their nonzero spectrum.
pub fn lpca_lid(index: &NeighborIndex, x: &[f64], k: usize, rule: ThresholdRule) -> Result<usize> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("local PCA needs k ≥ 2, got {k}")));
    }
    Ok(lpca_from_neighbors(index, &index.query(x, k)?, rule))
}

pub(crate) fn lpca_from_neighbors(index: &NeighborIndex, nn: &[Neighbor], rule: ThresholdRule) -> usize {
    let k = nn.len();
    let d = index.dim();
    let pts = index.points();
    let mut m = DMatrix::from_fn(k, d, |r, c| pts[(nn[r].index, c)]);
    for c in 0..d {
        let mean = m.column(c).mean();
        m.column_mut(c).add_scalar_mut(-mean);
    }
    let gram = if k <= d { &m * m.transpose() } else { m.transpose() * &m };
    let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    rule.count(&eig)
}
