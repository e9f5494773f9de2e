//! Merges run directories into one plot-ready JSON document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::train::{read_metrics_csv, METRICS_FILE};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Metrics exported as series, in output order.
pub const REPORT_METRICS: [&str; 6] = [
    "train_loss",
    "task_loss",
    "reg_loss",
    "test_top1",
    "effective_rank",
    "condition_number",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub run: String,
    pub epoch: Vec<usize>,
    /// `None` where the metric was unavailable at that epoch.
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFailure {
    pub dir: PathBuf,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub runs: Vec<String>,
    pub series: BTreeMap<String, Vec<Series>>,
    pub failures: Vec<ReportFailure>,
}

impl Report {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn run_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

/// Reads `metrics.csv` from each directory. Unreadable directories are listed
/// under `failures` rather than aborting the report.
pub fn cmd_report(dirs: &[PathBuf]) -> Report {
    let mut report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        runs: Vec::new(),
        series: REPORT_METRICS.iter().map(|m| (m.to_string(), Vec::new())).collect(),
        failures: Vec::new(),
    };
    for dir in dirs {
        let records = match read_metrics_csv(&dir.join(METRICS_FILE)) {
            Ok(r) => r,
            Err(e) => {
                report.failures.push(ReportFailure {
                    dir: dir.clone(),
                    error: e.to_string(),
                });
                continue;
            }
        };
        let name = run_name(dir);
        let epoch: Vec<usize> = records.iter().map(|r| r.epoch).collect();
        for metric in REPORT_METRICS {
            let values = records
                .iter()
                .map(|r| match metric {
                    "train_loss" => Some(r.train_loss),
                    "task_loss" => Some(r.task_loss),
                    "reg_loss" => Some(r.reg_loss),
                    "test_top1" => Some(r.test_top1),
                    "effective_rank" => r.effective_rank,
                    "condition_number" => r.condition_number,
                    _ => unreachable!(),
                })
                .collect();
            report.series.get_mut(metric).expect("metric key").push(Series {
                run: name.clone(),
                epoch: epoch.clone(),
                values,
            });
        }
        report.runs.push(name);
    }
    report
}
