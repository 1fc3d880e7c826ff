use std::fs;
use std::path::Path;

use serde::Serialize;

use super::io_error;
use crate::driver::RunReport;
use crate::error::{Error, Result};

fn csv_error(path: &Path, e: csv::Error) -> Error {
    io_error(path, std::io::Error::other(e))
}

/// One CSV row per flow iteration.
pub fn write_iterations_csv(path: &Path, report: &RunReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    if report.iterations.is_empty() {
        w.write_record([
            "round", "stage", "iteration", "h", "tau", "energy", "batch_size", "active_rows", "interior_rows",
            "exterior_rows", "region_elements", "vertex_count", "element_count", "max_violation", "wall_seconds",
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    for rec in &report.iterations {
        w.serialize(rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_summary_json(path: &Path, report: &RunReport) -> Result<()> {
    let mut summary = serde_json::to_value(report).map_err(|e| io_error(path, e.into()))?;
    // The per-iteration log lives in the CSV.
    if let Some(obj) = summary.as_object_mut() {
        obj.remove("iterations");
        obj.insert("iteration_count".into(), report.iterations.len().into());
    }
    let text = serde_json::to_string_pretty(&summary).map_err(|e| io_error(path, e.into()))?;
    fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

/// One method's row in a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub mesh: String,
    pub grid: String,
    pub hausdorff: f64,
    pub chamfer: f64,
    pub sdf_energy: f64,
    pub n_samples: usize,
    pub time_seconds: f64,
}

pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}
