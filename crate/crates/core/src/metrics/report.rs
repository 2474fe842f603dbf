use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::error::{write_file, IoError};

/// Metrics for one generated sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sample_id: String,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub tau: f64,
    /// `None` when no pixel had enough ground-truth motion.
    pub optflow: Option<f64>,
    pub idiff: f64,
    pub idiff_m: f64,
    pub idiff_m_empty: bool,
    pub psnr: f64,
    pub ssim: f64,
}

/// Column means over a set of reports; `optflow` skips samples without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub samples: usize,
    pub optflow: Option<f64>,
    pub idiff: f64,
    pub idiff_m: f64,
    pub psnr: f64,
    pub ssim: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(reports: &[MetricReport]) -> Aggregate {
    let col = |f: fn(&MetricReport) -> f64| mean(reports.iter().map(f)).unwrap_or(0.0);
    Aggregate {
        samples: reports.len(),
        optflow: mean(reports.iter().filter_map(|r| r.optflow)),
        idiff: col(|r| r.idiff),
        idiff_m: mean(reports.iter().filter(|r| !r.idiff_m_empty).map(|r| r.idiff_m)).unwrap_or(0.0),
        psnr: col(|r| r.psnr),
        ssim: col(|r| r.ssim),
    }
}

pub fn write_report_json(report: &MetricReport, path: &Path) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(path, text.as_bytes())
}

/// One row per sample plus a trailing `mean` row.
pub fn write_csv(reports: &[MetricReport], path: &Path) -> Result<(), MetricsError> {
    let csv_err = |e: csv::Error| MetricsError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["sample_id", "optflow", "idiff", "idiff_m", "psnr", "ssim"])
        .map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        let idiff_m = if r.idiff_m_empty { String::new() } else { r.idiff_m.to_string() };
        w.write_record([
            r.sample_id.clone(),
            opt(r.optflow),
            r.idiff.to_string(),
            idiff_m,
            r.psnr.to_string(),
            r.ssim.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let a = aggregate(reports);
    w.write_record([
        "mean".to_string(),
        opt(a.optflow),
        a.idiff.to_string(),
        a.idiff_m.to_string(),
        a.psnr.to_string(),
        a.ssim.to_string(),
    ])
    .map_err(csv_err)?;
    let bytes = w.into_inner().map_err(|e| MetricsError::Csv(e.to_string()))?;
    write_file(path, &bytes)?;
    Ok(())
}
