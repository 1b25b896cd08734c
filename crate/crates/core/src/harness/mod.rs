//! Experiment configs, metrics, δ-sweeps, benchmark suites and CSV reports.

mod bench;
mod config;
mod metrics;
mod report;
mod runner;
mod sweep;

pub use bench::{figure_sweeps, run_bench, table1_configs, BenchOutcome, Suite, TABLE1_DATASETS};
pub use config::{MethodConfig, RunConfig, SpecSource};
pub use metrics::{compute_metrics, compute_run_metrics, Metrics};
pub use report::{
    emit_plot_data, fmt_float, plot_rows_from_metrics, plot_rows_from_sweeps, write_report_csv,
    write_summary_csv, write_sweep_csv, PlotRow,
};
pub use runner::{
    estimate_queries, run_experiment, ComponentSummary, MetricsReport, PhaseTimings, QueryRow, RunResult,
};
pub use sweep::{sweep_delta, SweepConfig, SweepPoint, SweepReport, SweepWindow};

use crate::{Error, Result};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "LIDL_THREADS";

/// Sizes the global thread pool from `LIDL_THREADS` when set; returns the
/// requested count.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(Some(n))
}
