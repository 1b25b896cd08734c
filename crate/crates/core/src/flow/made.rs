//! MADE connectivity masks.

use ndarray::Array2;
use rand::Rng;

use crate::rng::seeded;
use crate::{Error, Result};

/// Degrees and binary masks of one masked autoencoder.
///
/// `degrees[0]` holds the input degrees (`1..=D`, the position of each
/// coordinate in `ordering`); `degrees[l]` those of hidden layer `l`. Output
/// unit `i` may only see hidden units of degree below the degree of input `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct MadeMasks {
    pub dim: usize,
    pub hidden: Vec<usize>,
    /// `ordering[k]` is the coordinate conditioned `k`-th.
    pub ordering: Vec<usize>,
    pub degrees: Vec<Vec<usize>>,
    /// Hidden masks (`out × in`) followed by the output mask (`D × last`).
    pub masks: Vec<Array2<f64>>,
}

/// Input degrees for `ordering`.
pub fn input_degrees(ordering: &[usize]) -> Result<Vec<usize>> {
    let d = ordering.len();
    let mut deg = vec![0; d];
    for (k, &i) in ordering.iter().enumerate() {
        if i >= d || deg[i] != 0 {
            return Err(Error::InvalidArgument(format!("{ordering:?} is not a permutation")));
        }
        deg[i] = k + 1;
    }
    Ok(deg)
}

/// Draws hidden degrees uniformly on `[min previous degree, D − 1]` and builds
/// the masks. With `D = 1` every hidden unit has degree 0 and sees nothing, so
/// the conditioner reduces to its biases.
pub fn build_masks(dim: usize, hidden: &[usize], ordering: &[usize], seed: u64) -> Result<MadeMasks> {
    if dim == 0 {
        return Err(Error::InvalidArgument("MADE needs at least one input".into()));
    }
    if ordering.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: ordering.len(),
        });
    }
    if hidden.iter().any(|&h| h == 0) {
        return Err(Error::InvalidArgument("hidden layer sizes must be at least 1".into()));
    }
    let mut rng = seeded(seed);
    let mut degrees = vec![input_degrees(ordering)?];
    for &h in hidden {
        let lo = degrees.last().and_then(|p| p.iter().min().copied()).unwrap_or(1);
        let layer = if dim == 1 {
            vec![0; h]
        } else {
            let lo = lo.min(dim - 1);
            (0..h).map(|_| rng.random_range(lo..=dim - 1)).collect()
        };
        degrees.push(layer);
    }
    masks_from_degrees(dim, ordering.to_vec(), degrees)
}

/// Builds masks from explicit degrees (`degrees[0]` must be the input degrees).
pub fn masks_from_degrees(dim: usize, ordering: Vec<usize>, degrees: Vec<Vec<usize>>) -> Result<MadeMasks> {
    if degrees.first().map(|d| d.len()) != Some(dim) {
        return Err(Error::InvalidArgument("input degrees must cover every coordinate".into()));
    }
    let mut masks = Vec::with_capacity(degrees.len());
    for l in 1..degrees.len() {
        let (prev, cur) = (&degrees[l - 1], &degrees[l]);
        masks.push(Array2::from_shape_fn((cur.len(), prev.len()), |(k, j)| {
            f64::from(u8::from(cur[k] >= prev[j] && cur[k] > 0))
        }));
    }
    let last = degrees.last().expect("input degrees present");
    let inputs = &degrees[0];
    masks.push(Array2::from_shape_fn((dim, last.len()), |(i, k)| {
        f64::from(u8::from(inputs[i] > last[k]))
    }));
    Ok(MadeMasks {
        dim,
        hidden: degrees[1..].iter().map(Vec::len).collect(),
        ordering,
        degrees,
        masks,
    })
}

impl MadeMasks {
    /// `C[i, j] > 0` iff some path connects input `j` to output `i`.
    pub fn connectivity(&self) -> Array2<f64> {
        let mut acc = Array2::from_shape_fn((self.dim, self.dim), |(i, j)| f64::from(u8::from(i == j)));
        for m in &self.masks {
            acc = m.dot(&acc);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_autoregressive(m: &MadeMasks) {
        let deg = &m.degrees[0];
        let c = m.connectivity();
        for i in 0..m.dim {
            for j in 0..m.dim {
                if c[(i, j)] > 0.0 {
                    assert!(deg[j] < deg[i], "output {i} sees input {j}");
                }
            }
        }
    }

    #[test]
    fn one_dimensional_conditioner_is_constant() {
        let m = build_masks(1, &[8, 8], &[0], 3).unwrap();
        assert!(m.masks[0].iter().all(|&v| v == 0.0));
        assert_eq!(m.connectivity()[(0, 0)], 0.0);
    }

    #[test]
    fn three_dims_strictly_lower_triangular() {
        let m = build_masks(3, &[8], &[0, 1, 2], 1).unwrap();
        assert_autoregressive(&m);
        // the last coordinate can see both predecessors with enough units
        let c = m.connectivity();
        assert!(c[(2, 0)] > 0.0 || c[(2, 1)] > 0.0);
    }

    #[test]
    fn reversed_ordering_flips_dependence() {
        let m = build_masks(4, &[32, 32], &[3, 2, 1, 0], 9).unwrap();
        assert_autoregressive(&m);
        let c = m.connectivity();
        assert_eq!(c.row(3).sum(), 0.0);
        assert!(c[(0, 3)] > 0.0);
    }

    #[test]
    fn rejects_non_permutation() {
        assert!(build_masks(3, &[4], &[0, 0, 1], 0).is_err());
        assert!(build_masks(3, &[0], &[0, 1, 2], 0).is_err());
    }
}
