use std::io::Write;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::regression::{ols_fit, RegressionFit};
use super::schedule::{DeltaSchedule, ScheduleKind};
use crate::density::{build_backend, BackendConfig, DensityBackend, LogDensity};
use crate::manifolds::{interior_queries, Dataset};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Adds i.i.d. `N(0, δ²I)` noise; labels are carried over.
pub fn perturb(data: &Dataset, delta: f64, seed: u64) -> Result<Dataset> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be ≥ 0, got {delta}")));
    }
    let mut out = data.clone();
    if delta == 0.0 {
        return Ok(out);
    }
    let mut rng = seeded(seed);
    for v in out.points.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += delta * e;
    }
    Ok(out)
}

/// Which points to estimate at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuerySelection {
    All,
    /// `n` dataset points drawn without replacement (all if `n ≥ len`).
    Subsample { n: usize },
    Indices { indices: Vec<usize> },
    External { points: Vec<Vec<f64>> },
    /// Fresh samples from the dataset's manifold at least `margin` inside the
    /// support's boundary.
    Interior { n: usize, margin: f64 },
}

impl Default for QuerySelection {
    fn default() -> Self {
        QuerySelection::Subsample { n: 100 }
    }
}

/// Resolved query points with whatever labels are known for them.
#[derive(Clone, Debug, PartialEq)]
pub struct QuerySet {
    pub points: Array2<f64>,
    /// Row indices into the dataset, when the queries are dataset points.
    pub indices: Option<Vec<usize>>,
    pub true_lid: Option<Vec<u32>>,
    pub component_id: Option<Vec<u32>>,
}

impl QuerySelection {
    pub fn resolve(&self, data: &Dataset, seed: u64) -> Result<QuerySet> {
        let from_indices = |idx: Vec<usize>| -> Result<QuerySet> {
            if let Some(&bad) = idx.iter().find(|&&i| i >= data.len()) {
                return Err(Error::InvalidArgument(format!(
                    "query index {bad} out of range for {} points",
                    data.len()
                )));
            }
            let sel = data.select(&idx);
            Ok(QuerySet {
                points: sel.points,
                indices: Some(idx),
                true_lid: sel.true_lid,
                component_id: sel.component_id,
            })
        };
        match self {
            QuerySelection::All => from_indices((0..data.len()).collect()),
            QuerySelection::Subsample { n } => {
                if *n >= data.len() {
                    return from_indices((0..data.len()).collect());
                }
                let mut idx = sample(&mut seeded(seed), data.len(), *n).into_vec();
                idx.sort_unstable();
                from_indices(idx)
            }
            QuerySelection::Indices { indices } => from_indices(indices.clone()),
            QuerySelection::External { points } => {
                let d = data.dim();
                if let Some(p) = points.iter().find(|p| p.len() != d) {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: p.len(),
                    });
                }
                let flat: Vec<f64> = points.iter().flatten().copied().collect();
                Ok(QuerySet {
                    points: Array2::from_shape_vec((points.len(), d), flat)
                        .expect("rows checked above"),
                    indices: None,
                    true_lid: None,
                    component_id: None,
                })
            }
            QuerySelection::Interior { n, margin } => {
                let spec = data.spec.as_ref().ok_or_else(|| {
                    Error::InvalidSpec("interior queries need the dataset's manifold spec".into())
                })?;
                let q = interior_queries(spec, *n, *margin, seed)?;
                Ok(QuerySet {
                    points: q.points,
                    indices: None,
                    true_lid: q.true_lid,
                    component_id: q.component_id,
                })
            }
        }
    }
}

fn default_ensemble() -> usize {
    1
}

/// Everything `lidl_estimate` needs besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LidlConfig {
    #[serde(default)]
    pub schedule: ScheduleKind,
    pub backend: BackendConfig,
    /// Independently seeded models per δ whose log-densities are averaged.
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub queries: QuerySelection,
}

impl LidlConfig {
    pub fn new(schedule: ScheduleKind, backend: BackendConfig) -> Self {
        LidlConfig {
            schedule,
            backend,
            ensemble: 1,
            seed: 0,
            queries: QuerySelection::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.build()?;
        if self.ensemble == 0 {
            return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
        }
        Ok(())
    }
}

/// LID estimate at one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LidEstimate {
    pub query_index: usize,
    pub query: Vec<f64>,
    /// `D + slope`, unclamped.
    pub d_hat: f64,
    pub fit: RegressionFit,
    /// `η_j = log ρ̂_j(x)` per δ in schedule order.
    pub log_densities: Vec<f64>,
}

impl LidEstimate {
    /// `d̂` clamped to `[0, D]`, for presentation only.
    pub fn clamped(&self) -> f64 {
        self.d_hat.clamp(0.0, self.query.len() as f64)
    }
}

/// A query whose log-densities could not be regressed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryFailure {
    pub query_index: usize,
    pub reason: String,
}

/// Estimates for every query, in query order.
#[derive(Clone, Debug, PartialEq)]
pub struct LidReport {
    pub backend: String,
    pub schedule: DeltaSchedule,
    pub ambient_dim: usize,
    pub outcomes: Vec<std::result::Result<LidEstimate, QueryFailure>>,
}

impl LidReport {
    pub fn estimates(&self) -> impl Iterator<Item = &LidEstimate> {
        self.outcomes.iter().filter_map(|o| o.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &QueryFailure> {
        self.outcomes.iter().filter_map(|o| o.as_ref().err())
    }

    /// `d̂` per query, `None` where the query failed.
    pub fn d_hats(&self) -> Vec<Option<f64>> {
        self.outcomes
            .iter()
            .map(|o| o.as_ref().ok().map(|e| e.d_hat))
            .collect()
    }

    /// CSV rows `query_index,d_hat,r2,eta_0,…`; failed queries leave the
    /// numeric cells empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["query_index".to_string(), "d_hat".into(), "r2".into()];
        header.extend((0..self.schedule.len()).map(|j| format!("eta_{j}")));
        w.write_record(&header)?;
        for outcome in &self.outcomes {
            let row: Vec<String> = match outcome {
                Ok(e) => {
                    let mut r = vec![
                        e.query_index.to_string(),
                        format!("{:.8e}", e.d_hat),
                        format!("{:.8e}", e.fit.r2),
                    ];
                    r.extend(e.log_densities.iter().map(|v| format!("{v:.8e}")));
                    r
                }
                Err(f) => {
                    let mut r = vec![f.query_index.to_string()];
                    r.extend(std::iter::repeat_n(String::new(), 2 + self.schedule.len()));
                    r
                }
            };
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Prepared models for every `(δ_j, member)` pair.
pub struct PreparedModels {
    pub schedule: DeltaSchedule,
    pub models: Vec<Vec<Box<dyn LogDensity>>>,
}

/// Fits or configures one model per δ and ensemble member.
pub fn prepare_models(
    backend: &dyn DensityBackend,
    data: &Dataset,
    schedule: &DeltaSchedule,
    ensemble: usize,
    seed: u64,
) -> Result<PreparedModels> {
    if ensemble == 0 {
        return Err(Error::InvalidArgument("ensemble size must be at least 1".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..schedule.len())
        .flat_map(|j| (0..ensemble).map(move |m| (j, m)))
        .collect();
    let prepared: Vec<Box<dyn LogDensity>> = jobs
        .par_iter()
        .map(|&(j, m)| {
            let delta = schedule.deltas()[j];
            let member_seed = derive_seed(seed, &[j as u64, m as u64]);
            if backend.fits_perturbed_data() {
                let noisy = perturb(data, delta, derive_seed(member_seed, &[0]))?;
                backend.prepare(&noisy, delta, member_seed)
            } else {
                backend.prepare(data, delta, member_seed)
            }
        })
        .collect::<Result<_>>()?;
    let mut models: Vec<Vec<Box<dyn LogDensity>>> = (0..schedule.len()).map(|_| Vec::new()).collect();
    for ((j, _), model) in jobs.into_iter().zip(prepared) {
        models[j].push(model);
    }
    Ok(PreparedModels {
        schedule: schedule.clone(),
        models,
    })
}

impl PreparedModels {
    /// Regresses averaged log-densities against `log δ` at every query.
    pub fn estimate(&self, backend_id: &str, queries: ArrayView2<f64>) -> LidReport {
        let log_deltas = self.schedule.log_deltas();
        let ambient = queries.ncols();
        let rows: Vec<(usize, Vec<f64>)> = queries
            .axis_iter(Axis(0))
            .enumerate()
            .map(|(i, r)| (i, r.to_vec()))
            .collect();
        let outcomes = rows
            .into_par_iter()
            .map(|(i, x)| {
                let fail = |reason: String| QueryFailure {
                    query_index: i,
                    reason,
                };
                let mut etas = Vec::with_capacity(self.models.len());
                for (j, members) in self.models.iter().enumerate() {
                    let mut sum = 0.0;
                    for model in members {
                        let v = model.log_density(&x).map_err(|e| fail(e.to_string()))?;
                        if !v.is_finite() {
                            return Err(fail(format!(
                                "log-density is {v} at delta {}",
                                self.schedule.deltas()[j]
                            )));
                        }
                        sum += v;
                    }
                    etas.push(sum / members.len() as f64);
                }
                let fit = ols_fit(&log_deltas, &etas).map_err(|e| fail(e.to_string()))?;
                Ok(LidEstimate {
                    query_index: i,
                    d_hat: ambient as f64 + fit.slope,
                    query: x,
                    fit,
                    log_densities: etas,
                })
            })
            .collect();
        LidReport {
            backend: backend_id.to_string(),
            schedule: self.schedule.clone(),
            ambient_dim: ambient,
            outcomes,
        }
    }
}

/// The LIDL estimator: per-δ models, then a log-log regression per query.
pub fn lidl_estimate(
    backend: &dyn DensityBackend,
    data: &Dataset,
    queries: ArrayView2<f64>,
    config: &LidlConfig,
) -> Result<LidReport> {
    config.validate()?;
    if queries.ncols() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: queries.ncols(),
        });
    }
    let schedule = config.schedule.build()?;
    let models = prepare_models(backend, data, &schedule, config.ensemble, config.seed)?;
    Ok(models.estimate(backend.id(), queries))
}

/// Builds the configured backend, resolves the configured queries and runs
/// [`lidl_estimate`].
pub fn run_lidl(data: &Dataset, config: &LidlConfig) -> Result<(QuerySet, LidReport)> {
    let backend = build_backend(&config.backend);
    let queries = config.queries.resolve(data, derive_seed(config.seed, &[u64::MAX]))?;
    let report = lidl_estimate(backend.as_ref(), data, queries.points.view(), config)?;
    Ok((queries, report))
}
