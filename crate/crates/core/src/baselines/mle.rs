use super::index::{Neighbor, NeighborIndex};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 20;

/// Levina–Bickel maximum-likelihood estimate from the `k` nearest neighbors:
/// `[(1/(k−1)) Σ_{j<k} log(T_k / T_j)]^{−1}`.
pub fn mle_lid(index: &NeighborIndex, x: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("MLE needs k ≥ 2, got {k}")));
    }
    mle_from_neighbors(&index.query(x, k)?)
}

pub(crate) fn mle_from_neighbors(nn: &[Neighbor]) -> Result<f64> {
    let k = nn.len();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("MLE needs k ≥ 2, got {k}")));
    }
    if let Some(zero) = nn.iter().find(|n| n.distance == 0.0) {
        return Err(Error::DuplicatePoint { neighbor: zero.index });
    }
    let tk = nn[k - 1].distance;
    let s: f64 = nn[..k - 1].iter().map(|n| (tk / n.distance).ln()).sum();
    if !(s > 0.0) {
        return Err(Error::NonFinite(format!(
            "all {k} neighbors are equidistant; MLE is unbounded"
        )));
    }
    Ok((k - 1) as f64 / s)
}
