//! Single training run: data preparation, SGD loop, evaluation, outputs.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{batch_iterator, load_cifar_raw, synth_gaussian_classes, Dataset};
use crate::error::{Error, Result};
use crate::harness::config::{DatasetSpec, RunConfig};
use crate::linalg::{Matrix, RngStream};
use crate::metrics::{collapse_report, top1_accuracy, CollapseReport};
use crate::network::{backward, clip_global_norm, cross_entropy, forward, save_checkpoint, MlpModel, Sgd};
use crate::regularizers::sigreg;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const TIMING_FILE: &str = "timing.csv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";

const EVAL_CHUNK: usize = 1024;

/// Metrics at one evaluation point. Spectral fields describe the penultimate
/// layer on the test set and are absent when its spectrum is all zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub task_loss: f64,
    pub reg_loss: f64,
    pub test_top1: f64,
    pub effective_rank: Option<f64>,
    pub eigen_entropy: Option<f64>,
    pub condition_number: Option<f64>,
    pub top_eigen_fraction: Option<f64>,
    pub embedding_dim: usize,
    pub wall_ms: u64,
}

/// `metrics.csv` row: everything in [`RunRecord`] except wall time, which
/// goes to `timing.csv` so the metrics file is reproducible byte for byte.
#[derive(Serialize, Deserialize)]
struct CsvRow {
    epoch: usize,
    train_loss: f64,
    task_loss: f64,
    reg_loss: f64,
    test_top1: f64,
    effective_rank: Option<f64>,
    eigen_entropy: Option<f64>,
    condition_number: Option<f64>,
    top_eigen_fraction: Option<f64>,
    embedding_dim: usize,
}

impl From<&RunRecord> for CsvRow {
    fn from(r: &RunRecord) -> Self {
        CsvRow {
            epoch: r.epoch,
            train_loss: r.train_loss,
            task_loss: r.task_loss,
            reg_loss: r.reg_loss,
            test_top1: r.test_top1,
            effective_rank: r.effective_rank,
            eigen_entropy: r.eigen_entropy,
            condition_number: r.condition_number,
            top_eigen_fraction: r.top_eigen_fraction,
            embedding_dim: r.embedding_dim,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Converged,
    Collapsed,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub epoch: usize,
    pub step: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub train_rows: usize,
    pub test_rows: usize,
    pub input_dim: usize,
    pub num_classes: usize,
    pub widths: Vec<usize>,
    pub parameters: usize,
    pub attach_layers: Vec<usize>,
    pub input_normalization: String,
    pub batching: String,
    pub collapse_criterion: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub name: String,
    pub seed: u64,
    pub status: RunStatus,
    pub diverged: bool,
    pub divergence: Option<Divergence>,
    pub epochs_completed: usize,
    pub final_metrics: Option<RunRecord>,
    pub wall_ms_total: u64,
    pub metadata: RunMetadata,
    pub config: RunConfig,
}

pub struct RunOutcome {
    pub records: Vec<RunRecord>,
    pub summary: RunSummary,
    pub model: MlpModel,
}

/// Train/test datasets for a config, normalized with train-split statistics.
pub fn prepare_data(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let root = RngStream::new(cfg.seed);
    let (mut train, mut test) = match &cfg.dataset {
        DatasetSpec::Synthetic {
            num_classes,
            per_class,
            dim,
            spread,
            test_fraction,
        } => {
            let all = synth_gaussian_classes(&mut root.substream("data"), *num_classes, *per_class, *dim, *spread)?;
            all.split(*test_fraction, &mut root.substream("split"))?
        }
        DatasetSpec::Cifar {
            variant,
            train_path,
            test_path,
            train_limit,
            test_limit,
        } => (
            load_cifar_raw(train_path, *variant, *train_limit)?,
            load_cifar_raw(test_path, *variant, *test_limit)?,
        ),
    };
    if train.len() < cfg.batch_size {
        return Err(Error::Config(format!(
            "train split has {} rows, fewer than batch_size {}",
            train.len(),
            cfg.batch_size
        )));
    }
    if test.len() < 2 {
        return Err(Error::Config(format!("test split needs >= 2 rows, got {}", test.len())));
    }
    let norm = train.normalize().expect("non-empty train split");
    test.normalize_with(&norm);
    Ok((train, test))
}

/// Test accuracy and penultimate-layer diagnostics on the first
/// `diagnostic_rows` test rows.
pub fn evaluate(model: &MlpModel, ds: &Dataset, diagnostic_rows: usize) -> Result<(f64, Option<CollapseReport>)> {
    let features = ds
        .feature_matrix()
        .ok_or_else(|| Error::Config("cannot evaluate on an empty dataset".into()))?;
    let penultimate = model.penultimate();
    let diag_rows = diagnostic_rows.min(ds.len());
    let mut correct = 0.0;
    let mut diag = Vec::with_capacity(diag_rows * model.widths()[penultimate]);
    let mut start = 0;
    while start < ds.len() {
        let end = (start + EVAL_CHUNK).min(ds.len());
        let idx: Vec<usize> = (start..end).collect();
        let trace = forward(model, &features.select_rows(&idx))?;
        correct += top1_accuracy(trace.logits(), &ds.labels()[start..end])? * (end - start) as f64;
        if start < diag_rows {
            let hidden = trace.hidden(penultimate)?;
            for i in 0..(diag_rows.min(end) - start) {
                diag.extend_from_slice(hidden.row(i));
            }
        }
        start = end;
    }
    let width = model.widths()[penultimate];
    let report = match collapse_report(&Matrix::from_vec(diag_rows, width, diag)?) {
        Ok(r) => Some(r),
        Err(Error::UndefinedRank) => None,
        Err(e) => return Err(e),
    };
    Ok((correct / ds.len() as f64, report))
}

/// Runs training in memory.
pub fn train(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let (train_set, test_set) = prepare_data(cfg)?;
    let root = RngStream::new(cfg.seed);
    let widths = cfg.model.widths(train_set.dim(), train_set.num_classes())?;
    let mut model = MlpModel::he_init(&widths, &root.substream("init"))?;
    let mut batch_rng = root.substream("batches");
    let mut sketch_rng = root.substream("sketch");
    let mut sgd = Sgd::new(cfg.sgd.clone());
    let reg_cfg = cfg.sigreg.sigreg().filter(|c| c.alpha > 0.0);
    let attach: Vec<usize> = if cfg.sigreg.attach_layers.is_empty() {
        vec![model.penultimate()]
    } else {
        cfg.sigreg.attach_layers.clone()
    };

    let mut records = Vec::new();
    let mut divergence = None;
    let mut epochs_completed = 0;
    'epochs: for epoch in 1..=cfg.epochs {
        let (mut task_sum, mut reg_sum, mut steps) = (0.0, 0.0, 0usize);
        for batch in batch_iterator(&train_set, cfg.batch_size, &mut batch_rng)? {
            let trace = forward(&model, &batch.features)?;
            let task = cross_entropy(trace.logits(), &batch.labels)?;
            let mut reg_value = 0.0;
            let mut injected = Vec::new();
            if let Some(rc) = &reg_cfg {
                for &layer in &attach {
                    let mut reg = sigreg(trace.hidden(layer)?, rc, &mut sketch_rng)?;
                    reg_value += reg.value;
                    reg.grad.scale_in_place(rc.alpha);
                    injected.push((layer, reg.grad));
                }
            }
            let alpha = reg_cfg.as_ref().map_or(0.0, |c| c.alpha);
            let total = task.value + alpha * reg_value;
            if !total.is_finite() {
                divergence = Some(Divergence {
                    epoch,
                    step: steps,
                    reason: format!("non-finite loss (task {}, reg {})", task.value, reg_value),
                });
                break 'epochs;
            }
            let refs: Vec<(usize, &Matrix)> = injected.iter().map(|(l, g)| (*l, g)).collect();
            let grads = backward(&model, &trace, &task.grad, &refs)?;
            if !grads.is_finite() {
                divergence = Some(Divergence {
                    epoch,
                    step: steps,
                    reason: "non-finite gradient".into(),
                });
                break 'epochs;
            }
            let grads = clip_global_norm(grads, cfg.sgd.clip_norm);
            sgd.step(&mut model, &grads)?;
            task_sum += task.value;
            reg_sum += reg_value;
            steps += 1;
        }
        epochs_completed = epoch;
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let (test_top1, report) = evaluate(&model, &test_set, cfg.diagnostic_rows)?;
            let n = steps as f64;
            let alpha = reg_cfg.as_ref().map_or(0.0, |c| c.alpha);
            records.push(RunRecord {
                epoch,
                train_loss: (task_sum + alpha * reg_sum) / n,
                task_loss: task_sum / n,
                reg_loss: reg_sum / n,
                test_top1,
                effective_rank: report.as_ref().map(|r| r.effective_rank),
                eigen_entropy: report.as_ref().map(|r| r.eigen_entropy),
                condition_number: report.as_ref().map(|r| r.condition_number),
                top_eigen_fraction: report.as_ref().map(|r| r.top_eigen_fraction),
                embedding_dim: model.widths()[model.penultimate()],
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
    }

    let final_metrics = records.last().cloned();
    let collapsed = final_metrics.as_ref().is_some_and(|r| match r.effective_rank {
        Some(er) => er < 0.1 * r.embedding_dim as f64,
        None => true,
    });
    let status = if divergence.is_some() {
        RunStatus::Diverged
    } else if collapsed {
        RunStatus::Collapsed
    } else {
        RunStatus::Converged
    };
    let summary = RunSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        name: cfg.name.clone(),
        seed: cfg.seed,
        status,
        diverged: divergence.is_some(),
        divergence,
        epochs_completed,
        final_metrics,
        wall_ms_total: started.elapsed().as_millis() as u64,
        metadata: RunMetadata {
            train_rows: train_set.len(),
            test_rows: test_set.len(),
            input_dim: train_set.dim(),
            num_classes: train_set.num_classes(),
            parameters: model.num_parameters(),
            widths,
            attach_layers: attach,
            input_normalization: "per-dimension z-score fitted on the train split".into(),
            batching: "per-epoch shuffle, drop last partial batch".into(),
            collapse_criterion: "final penultimate effective_rank < 0.1 * width".into(),
        },
        config: cfg.clone(),
    };
    Ok(RunOutcome {
        records,
        summary,
        model,
    })
}

pub fn write_metrics_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if records.is_empty() {
        // Header only.
        w.write_record([
            "epoch",
            "train_loss",
            "task_loss",
            "reg_loss",
            "test_top1",
            "effective_rank",
            "eigen_entropy",
            "condition_number",
            "top_eigen_fraction",
            "embedding_dim",
        ])?;
    }
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows of a `metrics.csv` written by [`write_metrics_csv`]; `wall_ms` is 0.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row?;
        out.push(RunRecord {
            epoch: row.epoch,
            train_loss: row.train_loss,
            task_loss: row.task_loss,
            reg_loss: row.reg_loss,
            test_top1: row.test_top1,
            effective_rank: row.effective_rank,
            eigen_entropy: row.eigen_entropy,
            condition_number: row.condition_number,
            top_eigen_fraction: row.top_eigen_fraction,
            embedding_dim: row.embedding_dim,
            wall_ms: 0,
        });
    }
    Ok(out)
}

/// Trains and writes the run directory: config copy, metrics CSV, timing
/// CSV, JSON summary and final checkpoint.
pub fn cmd_train(cfg: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let outcome = train(cfg)?;
    write_run_dir(&outcome, out_dir)?;
    Ok(outcome.summary)
}

pub fn write_run_dir(outcome: &RunOutcome, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let cfg_path = out_dir.join(CONFIG_FILE);
    fs::write(&cfg_path, outcome.summary.config.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;
    write_metrics_csv(&outcome.records, &out_dir.join(METRICS_FILE))?;

    let timing_path = out_dir.join(TIMING_FILE);
    let mut timing = csv::Writer::from_path(&timing_path)?;
    timing.write_record(["epoch", "wall_ms"])?;
    for r in &outcome.records {
        timing.write_record([r.epoch.to_string(), r.wall_ms.to_string()])?;
    }
    timing.flush().map_err(|e| Error::io(&timing_path, e))?;

    let summary_path = out_dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&outcome.summary)?;
    fs::write(&summary_path, json).map_err(|e| Error::io(&summary_path, e))?;
    save_checkpoint(&outcome.model, &out_dir.join(CHECKPOINT_FILE))
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
