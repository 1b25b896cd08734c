use ndarray::Array2;

use super::index::{Neighbor, NeighborIndex};
use crate::{Error, Result};

/// Fraction of the largest ratios `μ` dropped before the fit.
pub const DISCARD_FRACTION: f64 = 0.1;

/// Global TwoNN estimate over every point of `points`.
///
/// With `μ_i = r_2(i)/r_1(i)` sorted ascending and `F_i = i/n`, fits
/// `−log(1 − F_i) = d · log μ_i` through the origin on the lowest 90%.
pub fn twonn_lid(points: &Array2<f64>) -> Result<f64> {
    let n = points.nrows();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("TwoNN needs at least 3 points, got {n}")));
    }
    let index = NeighborIndex::new(points.clone())?;
    let mut mus = Vec::with_capacity(n);
    for nn in index.query_many(points.view(), 2)? {
        if nn[0].distance == 0.0 {
            return Err(Error::DuplicatePoint { neighbor: nn[0].index });
        }
        mus.push(nn[1].distance / nn[0].distance);
    }
    fit_ratios(mus)
}

/// TwoNN restricted to `x` and its `k` nearest neighbors.
pub fn twonn_local(index: &NeighborIndex, x: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("local TwoNN needs k ≥ 2, got {k}")));
    }
    twonn_from_neighbors(index, x, &index.query(x, k)?)
}

pub(crate) fn twonn_from_neighbors(index: &NeighborIndex, x: &[f64], nn: &[Neighbor]) -> Result<f64> {
    let k = nn.len();
    let d = index.dim();
    let mut hood = Array2::zeros((k + 1, d));
    hood.row_mut(0).assign(&ndarray::ArrayView1::from(x));
    for (r, n) in nn.iter().enumerate() {
        hood.row_mut(r + 1).assign(&index.points().row(n.index));
    }
    twonn_lid(&hood)
}

fn fit_ratios(mut mus: Vec<f64>) -> Result<f64> {
    mus.sort_by(f64::total_cmp);
    let n = mus.len();
    let keep = ((1.0 - DISCARD_FRACTION) * n as f64).floor() as usize;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, mu) in mus.iter().take(keep).enumerate() {
        let f = (i + 1) as f64 / n as f64;
        let xv = mu.ln();
        sxy += xv * -(-f).ln_1p();
        sxx += xv * xv;
    }
    if !(sxx > 0.0) {
        return Err(Error::NonFinite("all neighbor ratios are 1; TwoNN is unbounded".into()));
    }
    Ok(sxy / sxx)
}
