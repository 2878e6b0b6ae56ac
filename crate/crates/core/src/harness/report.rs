//! CSV and JSON reports of a sweep.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{AggregateStats, PointStats};
use crate::error::Result;

pub const CSV_HEADER: &str =
    "ebn0_db,frames,frame_errors,fer,fer_ci95,mean_metric_recursions,mean_path_copies,mean_pruned_paths,mean_pde";

#[derive(Debug, Serialize)]
struct Row {
    ebn0_db: f64,
    frames: u64,
    frame_errors: u64,
    fer: f64,
    fer_ci95: f64,
    mean_metric_recursions: f64,
    mean_path_copies: f64,
    mean_pruned_paths: f64,
    mean_pde: f64,
}

impl From<&PointStats> for Row {
    fn from(p: &PointStats) -> Self {
        Row {
            ebn0_db: p.ebn0_db,
            frames: p.frames,
            frame_errors: p.frame_errors,
            fer: p.fer(),
            fer_ci95: p.fer_ci95(),
            mean_metric_recursions: p.mean_metric_recursions(),
            mean_path_copies: p.mean_path_copies(),
            mean_pruned_paths: p.mean_pruned_paths(),
            mean_pde: p.mean_pde(),
        }
    }
}

/// One header line plus one row per point; floats carry 17 significant digits.
pub fn to_csv(stats: &AggregateStats) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &stats.points {
        let r = Row::from(p);
        let _ = writeln!(
            out,
            "{:.16e},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.ebn0_db,
            r.frames,
            r.frame_errors,
            r.fer,
            r.fer_ci95,
            r.mean_metric_recursions,
            r.mean_path_copies,
            r.mean_pruned_paths,
            r.mean_pde
        );
    }
    out
}

/// JSON array with the CSV columns as keys.
pub fn to_json(stats: &AggregateStats) -> String {
    let rows: Vec<Row> = stats.points.iter().map(Row::from).collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn emit_report(stats: &AggregateStats, stem: &Path) -> Result<ReportPaths> {
    let paths = ReportPaths {
        csv: stem.with_extension("csv"),
        json: stem.with_extension("json"),
    };
    std::fs::write(&paths.csv, to_csv(stats))?;
    std::fs::write(&paths.json, to_json(stats))?;
    Ok(paths)
}
