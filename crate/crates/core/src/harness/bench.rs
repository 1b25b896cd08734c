use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use super::config::{MethodConfig, RunConfig, SpecSource};
use super::report::{
    emit_plot_data, plot_rows_from_metrics, plot_rows_from_sweeps, write_report_csv, write_summary_csv,
    write_sweep_csv,
};
use super::runner::{run_experiment, MetricsReport};
use super::sweep::{sweep_delta, SweepConfig, SweepReport, SweepWindow};
use crate::baselines::ThresholdRule;
use crate::density::BackendConfig;
use crate::lidl::{QuerySelection, ScheduleKind};
use crate::manifolds::{preset, ManifoldKind};
use crate::{Error, Result};

/// Predefined benchmark collections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Oracle LIDL and the three baselines on every benchmark dataset.
    Table1,
    /// δ-sweeps on the circle, a multiscale Gaussian and parallel segments.
    Figures,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(Suite::Table1),
            "figures" => Ok(Suite::Figures),
            other => Err(Error::InvalidArgument(format!("unknown suite '{other}' (table1, figures)"))),
        }
    }
}

pub const TABLE1_DATASETS: &[&str] = &[
    "lollipop",
    "helix_r3",
    "sphere_s7_r8",
    "swiss_roll",
    "n10_r10",
    "n100_r100",
    "n1000_r1000",
    "n4000_r4000",
    "n10_r20",
    "n100_r200",
    "n1000_r2000",
    "n2000_r4000",
    "u10_r10",
    "u100_r100",
    "u1000_r1000",
    "u4000_r4000",
];

/// Desk-scale configs for the table suite.
pub fn table1_configs() -> Vec<RunConfig> {
    let methods = [
        MethodConfig::Lidl {
            schedule: ScheduleKind::Explicit {
                deltas: vec![1e-3, 1.05e-3],
            },
            backend: None,
            ensemble: 1,
        },
        MethodConfig::Mle { k: 20 },
        MethodConfig::Twonn { local_k: None },
        MethodConfig::Lpca {
            k: 100,
            rule: ThresholdRule::default(),
        },
    ];
    TABLE1_DATASETS
        .iter()
        .flat_map(|name| {
            methods.iter().map(move |m| {
                let mut c = RunConfig::new(SpecSource::Preset(name.to_string()), m.clone());
                c.queries = QuerySelection::Subsample { n: 100 };
                c
            })
        })
        .collect()
}

/// Named sweeps for the figure suite.
pub fn figure_sweeps() -> Vec<(String, SweepConfig)> {
    let external = |p: Vec<f64>| QuerySelection::External { points: vec![p] };
    let mut circle = SweepConfig::new(
        SpecSource::Preset("unit_circle".into()),
        ScheduleKind::LogSpaced { lo: 0.05, hi: 10.0, n: 25 },
    );
    circle.queries = external(vec![1.0, 0.0]);

    let gaussian_spec = preset("multiscale_gaussian_d10").expect("preset exists");
    let ManifoldKind::GaussianDiag { sigmas } = &gaussian_spec.kind else {
        unreachable!("multiscale preset is a diagonal Gaussian")
    };
    let midpoints: Vec<f64> = sigmas.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let mut steps = SweepConfig::new(
        SpecSource::Preset("multiscale_gaussian_d10".into()),
        ScheduleKind::Explicit { deltas: midpoints },
    );
    steps.window = SweepWindow::Centred { ratio: 1.05 };
    steps.queries = external(vec![0.0; sigmas.len()]);

    let mut segments = SweepConfig::new(
        SpecSource::Preset("parallel_segments".into()),
        ScheduleKind::LogSpaced { lo: 0.005, hi: 2.0, n: 25 },
    );
    segments.backend = Some(BackendConfig::quadrature());
    segments.queries = external(vec![10.0, 0.0]);

    vec![
        ("circle".into(), circle),
        ("multiscale_gaussian".into(), steps),
        ("parallel_segments".into(), segments),
    ]
}

/// What a suite run produced.
#[derive(Debug, Default)]
pub struct BenchOutcome {
    pub experiments: Vec<MetricsReport>,
    pub sweeps: Vec<SweepReport>,
}

impl BenchOutcome {
    pub fn all_failed(&self) -> bool {
        let any_experiment = self.experiments.iter().any(|r| !r.all_failed());
        let any_sweep = self.sweeps.iter().any(|s| s.points.iter().any(|p| p.count > 0));
        !(any_experiment || any_sweep)
    }
}

/// Runs a suite and writes its CSVs into `out_dir`.
pub fn run_bench(suite: Suite, out_dir: &Path) -> Result<BenchOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let mut outcome = BenchOutcome::default();
    match suite {
        Suite::Table1 => {
            for config in table1_configs() {
                let report = run_experiment(&config)?;
                let name = format!("report_{}_{}.csv", report.dataset, report.method);
                write_report_csv(&report, File::create(out_dir.join(name))?)?;
                outcome.experiments.push(report);
            }
            write_summary_csv(&outcome.experiments, File::create(out_dir.join("summary.csv"))?)?;
            emit_plot_data(
                &plot_rows_from_metrics(&outcome.experiments),
                File::create(out_dir.join("plot.csv"))?,
            )?;
        }
        Suite::Figures => {
            for (name, config) in figure_sweeps() {
                let report = sweep_delta(&config)?;
                write_sweep_csv(&report, File::create(out_dir.join(format!("sweep_{name}.csv")))?)?;
                outcome.sweeps.push(report);
            }
            emit_plot_data(&plot_rows_from_sweeps(&outcome.sweeps), File::create(out_dir.join("plot.csv"))?)?;
        }
    }
    Ok(outcome)
}
