use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{MethodConfig, SpecSource};
use super::metrics::sample_std;
use super::runner::estimate_queries;
use crate::density::BackendConfig;
use crate::lidl::theory::hard_estimate;
use crate::lidl::{DeltaSchedule, QuerySelection, ScheduleKind};
use crate::manifolds::{generate, ManifoldKind};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// The schedule evaluated at each grid value `δ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepWindow {
    /// `{δ, 1.05 δ}`.
    #[default]
    TwoPoint,
    /// `{δ/√r, δ√r}`.
    Centred { ratio: f64 },
}

impl SweepWindow {
    pub fn schedule(&self, delta: f64) -> Result<DeltaSchedule> {
        match *self {
            SweepWindow::TwoPoint => DeltaSchedule::two_point(delta),
            SweepWindow::Centred { ratio } => DeltaSchedule::centred_pair(delta, ratio),
        }
    }
}

fn default_n() -> usize {
    2000
}

fn default_runs() -> usize {
    1
}

fn default_ensemble() -> usize {
    1
}

/// LIDL estimates as a function of `δ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub spec: SpecSource,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// `None` picks the exact oracle for the spec.
    #[serde(default)]
    pub backend: Option<BackendConfig>,
    pub grid: ScheduleKind,
    #[serde(default)]
    pub window: SweepWindow,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default)]
    pub queries: QuerySelection,
}

impl SweepConfig {
    pub fn new(spec: SpecSource, grid: ScheduleKind) -> Self {
        SweepConfig {
            spec,
            n: default_n(),
            runs: default_runs(),
            seed: 0,
            backend: None,
            grid,
            window: SweepWindow::default(),
            ensemble: default_ensemble(),
            queries: QuerySelection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub delta: f64,
    /// Mean over every successful query of every run.
    pub d_hat_mean: Option<f64>,
    pub d_hat_std: Option<f64>,
    /// Number of deviations above `δ`, for diagonal Gaussians.
    pub hard_estimate: Option<usize>,
    pub count: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub dataset: String,
    pub method: String,
    pub points: Vec<SweepPoint>,
}

/// Runs LIDL with `window.schedule(δ)` for every `δ` of the grid.
pub fn sweep_delta(config: &SweepConfig) -> Result<SweepReport> {
    if config.runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let spec = config.spec.resolve()?;
    let grid = config.grid.build()?;
    let method = |delta: f64| -> Result<MethodConfig> {
        Ok(MethodConfig::Lidl {
            schedule: ScheduleKind::Explicit {
                deltas: config.window.schedule(delta)?.deltas().to_vec(),
            },
            backend: config.backend.clone(),
            ensemble: config.ensemble,
        })
    };
    let label = method(grid.deltas()[0])?.label(&spec);
    let mut per_delta: Vec<(Vec<f64>, usize)> = vec![(Vec::new(), 0); grid.len()];
    for run in 0..config.runs {
        let seed = derive_seed(config.seed, &[run as u64]);
        let data = generate(&spec, config.n, seed)?;
        let queries = config.queries.resolve(&data, derive_seed(seed, &[1]))?;
        let results: Vec<Result<Vec<(Option<f64>, Option<f64>, Option<String>)>>> = grid
            .deltas()
            .par_iter()
            .enumerate()
            .map(|(j, &delta)| {
                estimate_queries(&method(delta)?, &spec, &data, &queries, derive_seed(seed, &[2, j as u64]))
            })
            .collect();
        for (slot, res) in per_delta.iter_mut().zip(results) {
            for (d_hat, _, _) in res? {
                match d_hat {
                    Some(v) => slot.0.push(v),
                    None => slot.1 += 1,
                }
            }
        }
    }
    let sigmas = match &spec.kind {
        ManifoldKind::GaussianDiag { sigmas } => Some(sigmas.clone()),
        _ => None,
    };
    let points = grid
        .deltas()
        .iter()
        .zip(per_delta)
        .map(|(&delta, (vals, failures))| {
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            SweepPoint {
                delta,
                d_hat_mean: mean,
                d_hat_std: mean.map(|_| sample_std(&vals)),
                hard_estimate: sigmas.as_ref().map(|s| hard_estimate(s, delta)),
                count: vals.len(),
                failures,
            }
        })
        .collect();
    Ok(SweepReport {
        dataset: config.spec.label(),
        method: label,
        points,
    })
}
