use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{MethodConfig, RunConfig};
use super::metrics::{compute_run_metrics, Metrics};
use super::report::{write_report_csv, write_summary_csv};
use crate::density::build_backend;
use crate::lidl::{lidl_estimate, LidlConfig, QuerySet};
use crate::manifolds::{generate, Dataset, ManifoldSpec};
use crate::rng::derive_seed;
use crate::Result;

/// One query's outcome in one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryRow {
    pub run: usize,
    pub query_index: usize,
    pub dataset_index: Option<usize>,
    pub true_lid: Option<u32>,
    pub component_id: Option<u32>,
    pub d_hat: Option<f64>,
    pub r2: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub generate: Duration,
    pub estimate: Duration,
}

impl std::ops::AddAssign for PhaseTimings {
    fn add_assign(&mut self, o: Self) {
        self.generate += o.generate;
        self.estimate += o.estimate;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    pub rows: Vec<QueryRow>,
    /// Set when the run produced no usable estimate at all.
    pub error: Option<String>,
    pub timings: PhaseTimings,
}

impl RunResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Mean estimate and truth over the queries from one support component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub mean_d_hat: f64,
    pub mean_true_lid: f64,
    pub count: usize,
}

/// Everything one [`RunConfig`] produced.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub method: String,
    pub n: usize,
    pub runs: Vec<RunResult>,
    /// `None` when no run has both estimates and ground truth.
    pub metrics: Option<Metrics>,
    pub mean_true_lid: Option<f64>,
    pub components: BTreeMap<u32, ComponentSummary>,
    pub timings: PhaseTimings,
}

impl MetricsReport {
    pub fn failed_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.failed()).count()
    }

    pub fn failed_queries(&self) -> usize {
        self.rows().filter(|r| r.d_hat.is_none()).count()
    }

    pub fn all_failed(&self) -> bool {
        self.runs.iter().all(|r| r.failed())
    }

    pub fn rows(&self) -> impl Iterator<Item = &QueryRow> {
        self.runs.iter().flat_map(|r| r.rows.iter())
    }

    /// Every successful `d̂`, in run and query order.
    pub fn estimates(&self) -> Vec<f64> {
        self.rows().filter_map(|r| r.d_hat).collect()
    }
}

/// Estimates for every query, one entry per query row.
pub fn estimate_queries(
    method: &MethodConfig,
    spec: &ManifoldSpec,
    data: &Dataset,
    queries: &QuerySet,
    seed: u64,
) -> Result<Vec<(Option<f64>, Option<f64>, Option<String>)>> {
    match method {
        MethodConfig::Lidl { schedule, ensemble, .. } => {
            let backend_config = method.lidl_backend(spec)?;
            let backend = build_backend(&backend_config);
            let mut config = LidlConfig::new(schedule.clone(), backend_config);
            config.ensemble = *ensemble;
            config.seed = seed;
            let report = lidl_estimate(backend.as_ref(), data, queries.points.view(), &config)?;
            Ok(report
                .outcomes
                .into_iter()
                .map(|o| match o {
                    Ok(e) => (Some(e.d_hat), Some(e.fit.r2), None),
                    Err(f) => (None, None, Some(f.reason)),
                })
                .collect())
        }
        _ => {
            let baseline = method.baseline().expect("non-LIDL methods are baselines");
            Ok(baseline
                .estimate(data, queries.points.view())?
                .into_iter()
                .map(|o| match o {
                    Ok(v) if v.is_finite() => (Some(v), None, None),
                    Ok(v) => (None, None, Some(format!("non-finite estimate {v}"))),
                    Err(f) => (None, None, Some(f.reason)),
                })
                .collect())
        }
    }
}

fn run_once(config: &RunConfig, spec: &ManifoldSpec, run: usize) -> RunResult {
    let seed = derive_seed(config.seed, &[run as u64]);
    let mut timings = PhaseTimings::default();
    let t0 = Instant::now();
    let prepared = generate(spec, config.n, seed).and_then(|data| {
        let q = config.queries.resolve(&data, derive_seed(seed, &[1]))?;
        Ok((data, q))
    });
    timings.generate = t0.elapsed();
    let fail = |e: crate::Error, timings| RunResult {
        run,
        seed,
        rows: Vec::new(),
        error: Some(e.to_string()),
        timings,
    };
    let (data, queries) = match prepared {
        Ok(v) => v,
        Err(e) => return fail(e, timings),
    };
    let t1 = Instant::now();
    let outcomes = estimate_queries(&config.method, spec, &data, &queries, derive_seed(seed, &[2]));
    timings.estimate = t1.elapsed();
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(e) => return fail(e, timings),
    };
    let rows: Vec<QueryRow> = outcomes
        .into_iter()
        .enumerate()
        .map(|(i, (d_hat, r2, error))| QueryRow {
            run,
            query_index: i,
            dataset_index: queries.indices.as_ref().map(|v| v[i]),
            true_lid: queries.true_lid.as_ref().map(|v| v[i]),
            component_id: queries.component_id.as_ref().map(|v| v[i]),
            d_hat,
            r2,
            error,
        })
        .collect();
    let error = rows
        .iter()
        .all(|r| r.d_hat.is_none())
        .then(|| match rows.first().and_then(|r| r.error.clone()) {
            Some(e) => format!("every query failed; first error: {e}"),
            None => "no queries".to_string(),
        });
    RunResult {
        run,
        seed,
        rows,
        error,
        timings,
    }
}

/// Generates data, runs the method and scores it for every run; writes
/// `report.csv` and `summary.csv` when an output directory is configured.
pub fn run_experiment(config: &RunConfig) -> Result<MetricsReport> {
    config.validate()?;
    let spec = config.spec.resolve()?;
    let runs: Vec<RunResult> = (0..config.runs)
        .into_par_iter()
        .map(|run| run_once(config, &spec, run))
        .collect();
    let report = summarize(config.spec.label(), config.method.label(&spec), config.n, runs);
    if let Some(dir) = &config.output {
        std::fs::create_dir_all(dir)?;
        write_report_csv(&report, std::fs::File::create(dir.join("report.csv"))?)?;
        write_summary_csv(std::slice::from_ref(&report), std::fs::File::create(dir.join("summary.csv"))?)?;
    }
    Ok(report)
}

pub(crate) fn summarize(dataset: String, method: String, n: usize, runs: Vec<RunResult>) -> MetricsReport {
    let scored: Vec<(Vec<f64>, Vec<f64>)> = runs
        .iter()
        .map(|r| {
            r.rows
                .iter()
                .filter_map(|q| Some((q.d_hat?, q.true_lid? as f64)))
                .unzip()
        })
        .filter(|(e, _): &(Vec<f64>, Vec<f64>)| !e.is_empty())
        .collect();
    let pairs: Vec<(&[f64], &[f64])> = scored.iter().map(|(e, t)| (e.as_slice(), t.as_slice())).collect();
    let metrics = compute_run_metrics(&pairs).ok();
    let all_truths: Vec<f64> = scored.iter().flat_map(|(_, t)| t.iter().copied()).collect();
    let mean_true_lid = (!all_truths.is_empty()).then(|| all_truths.iter().sum::<f64>() / all_truths.len() as f64);

    let mut acc: BTreeMap<u32, (f64, f64, usize)> = BTreeMap::new();
    for row in runs.iter().flat_map(|r| r.rows.iter()) {
        if let (Some(c), Some(d), Some(t)) = (row.component_id, row.d_hat, row.true_lid) {
            let e = acc.entry(c).or_default();
            e.0 += d;
            e.1 += t as f64;
            e.2 += 1;
        }
    }
    let components = acc
        .into_iter()
        .map(|(c, (d, t, k))| {
            (
                c,
                ComponentSummary {
                    mean_d_hat: d / k as f64,
                    mean_true_lid: t / k as f64,
                    count: k,
                },
            )
        })
        .collect();
    let mut timings = PhaseTimings::default();
    for r in &runs {
        timings += r.timings;
    }
    MetricsReport {
        dataset,
        method,
        n,
        runs,
        metrics,
        mean_true_lid,
        components,
        timings,
    }
}
