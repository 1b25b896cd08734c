//! Nearest-neighbor LID baselines: Levina–Bickel MLE, TwoNN and local PCA.

mod index;
mod lpca;
mod mle;
mod twonn;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lidl::QueryFailure;
use crate::manifolds::Dataset;
use crate::Result;

pub use index::{IndexKind, Neighbor, NeighborIndex};
pub use lpca::{lpca_lid, ThresholdRule};
pub use mle::{mle_lid, DEFAULT_K};
pub use twonn::{twonn_lid, twonn_local, DISCARD_FRACTION};

fn default_k() -> usize {
    DEFAULT_K
}

/// Baseline selection as it appears in run configs, keyed by `method`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BaselineConfig {
    Mle {
        #[serde(default = "default_k")]
        k: usize,
    },
    /// Global estimate broadcast to every query, or a local one over
    /// `local_k` neighbors when set.
    Twonn {
        #[serde(default)]
        local_k: Option<usize>,
    },
    Lpca {
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        rule: ThresholdRule,
    },
}

impl BaselineConfig {
    pub fn id(&self) -> &'static str {
        match self {
            BaselineConfig::Mle { .. } => "mle",
            BaselineConfig::Twonn { .. } => "twonn",
            BaselineConfig::Lpca { .. } => "lpca",
        }
    }

    /// Estimates at every query row against `data`; failures are kept per query.
    pub fn estimate(
        &self,
        data: &Dataset,
        queries: ArrayView2<f64>,
    ) -> Result<Vec<std::result::Result<f64, QueryFailure>>> {
        let index = NeighborIndex::new(data.points.clone())?;
        let k = match self {
            BaselineConfig::Mle { k } | BaselineConfig::Lpca { k, .. } => *k,
            BaselineConfig::Twonn { local_k: Some(k) } => *k,
            BaselineConfig::Twonn { local_k: None } => {
                let global = twonn_lid(&data.points).map_err(|e| e.to_string());
                return Ok((0..queries.nrows())
                    .map(|i| {
                        global.clone().map_err(|reason| QueryFailure {
                            query_index: i,
                            reason,
                        })
                    })
                    .collect());
            }
        };
        if k < 2 {
            return Err(crate::Error::InvalidArgument(format!("{} needs k ≥ 2, got {k}", self.id())));
        }
        let neighbors = index.query_many(queries, k)?;
        Ok(neighbors
            .par_iter()
            .enumerate()
            .map(|(i, nn)| {
                let value = match self {
                    BaselineConfig::Mle { .. } => mle::mle_from_neighbors(nn),
                    BaselineConfig::Lpca { rule, .. } => Ok(lpca::lpca_from_neighbors(&index, nn, *rule) as f64),
                    BaselineConfig::Twonn { .. } => twonn::twonn_from_neighbors(&index, &queries.row(i).to_vec(), nn),
                };
                value.map_err(|e| QueryFailure {
                    query_index: i,
                    reason: e.to_string(),
                })
            })
            .collect())
    }
}

/// `query_index,d_hat,r2,method`, with `r2` always empty; failed queries
/// leave `d_hat` empty.
pub fn write_estimates_csv<W: std::io::Write>(
    method: &str,
    outcomes: &[std::result::Result<f64, QueryFailure>],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["query_index", "d_hat", "r2", "method"])?;
    for (i, o) in outcomes.iter().enumerate() {
        let d_hat = match o {
            Ok(v) if v.is_finite() => format!("{v:.8e}"),
            _ => String::new(),
        };
        w.write_record([i.to_string(), d_hat, String::new(), method.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
