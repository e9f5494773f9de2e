//! Ablation grids: the cross product of declared axes over a base run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::{apply_override, RegularizerChoice, RunConfig};
use crate::harness::train::{cmd_train, RunStatus};

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const AGGREGATE_SUMMARY_FILE: &str = "aggregate_summary.json";

/// Axes of the grid. A missing axis keeps the base config's value; a present
/// but empty axis is an error.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationAxes {
    pub variant: Option<Vec<RegularizerChoice>>,
    pub alpha: Option<Vec<f64>>,
    pub sketch_dim: Option<Vec<usize>>,
    pub integration_points: Option<Vec<usize>>,
    pub seed: Option<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub name: String,
    /// Run cells on the rayon pool.
    pub parallel: bool,
    pub base: RunConfig,
    pub axes: AblationAxes,
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            name: "ablation".into(),
            parallel: true,
            base: RunConfig::default(),
            axes: AblationAxes::default(),
        }
    }
}

/// Identity of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub variant: RegularizerChoice,
    pub alpha: f64,
    pub sketch_dim: usize,
    pub integration_points: usize,
    pub seed: u64,
}

impl CellKey {
    pub fn dir_name(&self) -> String {
        format!(
            "{}_a{}_k{}_t{}_s{}",
            self.variant.as_str(),
            self.alpha,
            self.sketch_dim,
            self.integration_points,
            self.seed
        )
    }
}

/// One row of `aggregate.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub variant: RegularizerChoice,
    pub alpha: f64,
    pub sketch_dim: usize,
    pub integration_points: usize,
    pub seed: u64,
    pub status: String,
    pub final_test_top1: Option<f64>,
    pub final_effective_rank: Option<f64>,
    pub final_train_loss: Option<f64>,
    pub run_dir: String,
    pub error: Option<String>,
}

/// Seed-averaged metrics for one `(variant, alpha, K, T)` group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub variant: RegularizerChoice,
    pub alpha: f64,
    pub sketch_dim: usize,
    pub integration_points: usize,
    pub runs: usize,
    pub mean_test_top1: Option<f64>,
    pub mean_effective_rank: Option<f64>,
}

impl AblationConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("parsing ablation config: {e}")))?;
        for o in overrides {
            // Scalar overrides target the base run config.
            apply_override(&mut table, &format!("base.{o}"))?;
        }
        let cfg: AblationConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.base.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    /// Cells in row-major order over (variant, alpha, K, T, seed).
    pub fn cells(&self) -> Result<Vec<(CellKey, RunConfig)>> {
        fn axis<T: Clone>(name: &str, values: &Option<Vec<T>>, base: T) -> Result<Vec<T>> {
            match values {
                None => Ok(vec![base]),
                Some(v) if v.is_empty() => Err(Error::Config(format!("ablation axis {name:?} is empty"))),
                Some(v) => Ok(v.clone()),
            }
        }
        let b = &self.base;
        let variants = axis("variant", &self.axes.variant, b.sigreg.variant)?;
        let alphas = axis("alpha", &self.axes.alpha, b.sigreg.alpha)?;
        let ks = axis("sketch_dim", &self.axes.sketch_dim, b.sigreg.sketch_dim)?;
        let ts = axis("integration_points", &self.axes.integration_points, b.sigreg.integration_points)?;
        let seeds = axis("seed", &self.axes.seed, b.seed)?;

        let mut cells = Vec::new();
        for &variant in &variants {
            for &alpha in &alphas {
                for &sketch_dim in &ks {
                    for &integration_points in &ts {
                        for &seed in &seeds {
                            let key = CellKey {
                                variant,
                                alpha,
                                sketch_dim,
                                integration_points,
                                seed,
                            };
                            let mut cfg = b.clone();
                            cfg.name = format!("{}/{}", self.name, key.dir_name());
                            cfg.seed = seed;
                            cfg.sigreg.variant = variant;
                            cfg.sigreg.alpha = alpha;
                            cfg.sigreg.sketch_dim = sketch_dim;
                            cfg.sigreg.integration_points = integration_points;
                            cells.push((key, cfg));
                        }
                    }
                }
            }
        }
        // Every cell shares the optimizer settings, baseline included.
        if let Some((_, first)) = cells.first() {
            if cells.iter().any(|(_, c)| c.sgd != first.sgd) {
                return Err(Error::Config("ablation cells must share SGD and clipping settings".into()));
            }
        }
        Ok(cells)
    }
}

pub struct AblationOutcome {
    pub rows: Vec<AggregateRow>,
    pub groups: Vec<GroupSummary>,
    pub root: PathBuf,
}

impl AblationOutcome {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Runs every cell into `root/<cell>/` and writes `aggregate.csv` and
/// `aggregate_summary.json` under `root`. A failing cell is recorded and the
/// rest proceed.
pub fn cmd_ablate(cfg: &AblationConfig, root: &Path) -> Result<AblationOutcome> {
    let cells = cfg.cells()?;
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let run_cell = |(key, run_cfg): &(CellKey, RunConfig)| -> AggregateRow {
        let dir = root.join(key.dir_name());
        let outcome = run_cfg.validate().and_then(|_| cmd_train(run_cfg, &dir));
        let mut row = AggregateRow {
            variant: key.variant,
            alpha: key.alpha,
            sketch_dim: key.sketch_dim,
            integration_points: key.integration_points,
            seed: key.seed,
            status: "failed".into(),
            final_test_top1: None,
            final_effective_rank: None,
            final_train_loss: None,
            run_dir: key.dir_name(),
            error: None,
        };
        match outcome {
            Ok(summary) => {
                row.status = match summary.status {
                    RunStatus::Converged => "converged",
                    RunStatus::Collapsed => "collapsed",
                    RunStatus::Diverged => "diverged",
                }
                .into();
                if let Some(m) = summary.final_metrics {
                    row.final_test_top1 = Some(m.test_top1);
                    row.final_effective_rank = m.effective_rank;
                    row.final_train_loss = Some(m.train_loss);
                }
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    };
    let rows: Vec<AggregateRow> = if cfg.parallel {
        cells.par_iter().map(run_cell).collect()
    } else {
        cells.iter().map(run_cell).collect()
    };

    let agg_path = root.join(AGGREGATE_FILE);
    let mut w = csv::Writer::from_path(&agg_path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&agg_path, e))?;

    let groups = group_means(&rows);
    let summary_path = root.join(AGGREGATE_SUMMARY_FILE);
    fs::write(&summary_path, serde_json::to_string_pretty(&groups)?).map_err(|e| Error::io(&summary_path, e))?;
    Ok(AblationOutcome {
        rows,
        groups,
        root: root.to_path_buf(),
    })
}

/// Seed means per `(variant, alpha, K, T)`, in first-appearance order.
pub fn group_means(rows: &[AggregateRow]) -> Vec<GroupSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<&AggregateRow>> = BTreeMap::new();
    for r in rows {
        let key = format!("{}|{}|{}|{}", r.variant.as_str(), r.alpha, r.sketch_dim, r.integration_points);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    order
        .iter()
        .map(|k| {
            let members = &groups[k];
            let first = members[0];
            GroupSummary {
                variant: first.variant,
                alpha: first.alpha,
                sketch_dim: first.sketch_dim,
                integration_points: first.integration_points,
                runs: members.len(),
                mean_test_top1: mean(members.iter().filter_map(|r| r.final_test_top1).collect()),
                mean_effective_rank: mean(members.iter().filter_map(|r| r.final_effective_rank).collect()),
            }
        })
        .collect()
}
