use std::io::Write;

use serde::{Deserialize, Serialize};

use super::runner::MetricsReport;
use super::sweep::SweepReport;
use crate::Result;

/// Nine significant digits; empty for missing or non-finite values.
pub fn fmt_float(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.8e}"),
        _ => String::new(),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-query rows of one experiment.
pub fn write_report_csv<W: Write>(report: &MetricsReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "run",
        "dataset",
        "method",
        "query_index",
        "dataset_index",
        "true_lid",
        "component_id",
        "d_hat",
        "r2",
        "error",
    ])?;
    for r in report.rows() {
        w.write_record([
            r.run.to_string(),
            report.dataset.clone(),
            report.method.clone(),
            r.query_index.to_string(),
            opt(r.dataset_index),
            opt(r.true_lid),
            opt(r.component_id),
            fmt_float(r.d_hat),
            fmt_float(r.r2),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per experiment. Wall-clock timings are left out so that equal
/// configs give byte-identical files.
pub fn write_summary_csv<W: Write>(reports: &[MetricsReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "dataset",
        "method",
        "n",
        "runs",
        "failed_runs",
        "failed_queries",
        "count",
        "mean_true_lid",
        "relative_bias",
        "relative_mae",
        "std",
        "normalized",
    ])?;
    for r in reports {
        let m = r.metrics.as_ref();
        w.write_record([
            r.dataset.clone(),
            r.method.clone(),
            r.n.to_string(),
            r.runs.len().to_string(),
            r.failed_runs().to_string(),
            r.failed_queries().to_string(),
            m.map_or(0, |m| m.count).to_string(),
            fmt_float(r.mean_true_lid),
            fmt_float(m.map(|m| m.relative_bias)),
            fmt_float(m.map(|m| m.relative_mae)),
            fmt_float(m.map(|m| m.std)),
            opt(m.map(|m| m.normalized)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `delta,d_hat_mean,d_hat_std,hard_estimate`.
pub fn write_sweep_csv<W: Write>(report: &SweepReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["delta", "d_hat_mean", "d_hat_std", "hard_estimate"])?;
    for p in &report.points {
        w.write_record([
            fmt_float(Some(p.delta)),
            fmt_float(p.d_hat_mean),
            fmt_float(p.d_hat_std),
            opt(p.hard_estimate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A long-format plotting row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub series: String,
    pub x: String,
    pub y: Option<f64>,
    pub ylo: Option<f64>,
    pub yhi: Option<f64>,
}

/// One series per sweep, `x = δ`, band `mean ± std`.
pub fn plot_rows_from_sweeps(sweeps: &[SweepReport]) -> Vec<PlotRow> {
    sweeps
        .iter()
        .flat_map(|s| {
            s.points.iter().map(move |p| PlotRow {
                series: format!("{}/{}", s.dataset, s.method),
                x: fmt_float(Some(p.delta)),
                y: p.d_hat_mean,
                ylo: p.d_hat_mean.zip(p.d_hat_std).map(|(m, s)| m - s),
                yhi: p.d_hat_mean.zip(p.d_hat_std).map(|(m, s)| m + s),
            })
        })
        .collect()
}

/// One row per `(dataset, method)`: relative bias with a band of one
/// relative run-to-run standard deviation.
pub fn plot_rows_from_metrics(reports: &[MetricsReport]) -> Vec<PlotRow> {
    reports
        .iter()
        .map(|r| {
            let bias = r.metrics.map(|m| m.relative_bias);
            let spread = r.metrics.and_then(|m| {
                let scale = if m.normalized { r.mean_true_lid? } else { 1.0 };
                Some(m.std / scale)
            });
            PlotRow {
                series: r.method.clone(),
                x: r.dataset.clone(),
                y: bias,
                ylo: bias.zip(spread).map(|(b, s)| b - s),
                yhi: bias.zip(spread).map(|(b, s)| b + s),
            }
        })
        .collect()
}

/// `series,x,y,ylo,yhi`; header only when `rows` is empty.
pub fn emit_plot_data<W: Write>(rows: &[PlotRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["series", "x", "y", "ylo", "yhi"])?;
    for r in rows {
        w.write_record([
            r.series.clone(),
            r.x.clone(),
            fmt_float(r.y),
            fmt_float(r.ylo),
            fmt_float(r.yhi),
        ])?;
    }
    w.flush()?;
    Ok(())
}
