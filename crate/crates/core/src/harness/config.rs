//! Run configuration, loaded from TOML with `KEY=VALUE` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::CifarVariant;
use crate::error::{Error, Result};
use crate::network::SgdConfig;
use crate::regularizers::{ResamplePolicy, SigregConfig, Variant};

/// Environment variable that overrides the default output root (`runs`).
pub const OUTPUT_ROOT_ENV: &str = "SIGREG_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSpec {
    Synthetic {
        num_classes: usize,
        per_class: usize,
        dim: usize,
        spread: f64,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    Cifar {
        variant: CifarVariant,
        train_path: PathBuf,
        test_path: PathBuf,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
}

fn default_test_fraction() -> f64 {
    0.2
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Synthetic {
            num_classes: 10,
            per_class: 200,
            dim: 32,
            spread: 1.0,
            test_fraction: default_test_fraction(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelPreset {
    /// 6 dense layers, hidden width 128.
    Desk,
    /// 6 dense layers, hidden width 1024.
    Stress,
    /// `depth` and `hidden_width` must both be given.
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub preset: ModelPreset,
    /// Number of dense layers (hidden layers + output).
    pub depth: Option<usize>,
    pub hidden_width: Option<usize>,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            preset: ModelPreset::Desk,
            depth: None,
            hidden_width: None,
        }
    }
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<(usize, usize)> {
        let (depth, width) = match self.preset {
            ModelPreset::Desk => (6, 128),
            ModelPreset::Stress => (6, 1024),
            ModelPreset::Custom => match (self.depth, self.hidden_width) {
                (Some(d), Some(w)) => (d, w),
                _ => return Err(Error::Config("custom model needs depth and hidden_width".into())),
            },
        };
        let depth = self.depth.unwrap_or(depth);
        let width = self.hidden_width.unwrap_or(width);
        if depth < 2 || width == 0 {
            return Err(Error::Config(format!(
                "model needs depth >= 2 and hidden_width >= 1, got {depth}, {width}"
            )));
        }
        Ok((depth, width))
    }

    /// Full width list for the given input and output sizes.
    pub fn widths(&self, input: usize, output: usize) -> Result<Vec<usize>> {
        let (depth, width) = self.resolve()?;
        let mut widths = vec![input];
        widths.extend(std::iter::repeat_n(width, depth - 1));
        widths.push(output);
        Ok(widths)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegularizerChoice {
    None,
    Weak,
    Strong,
}

impl RegularizerChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            RegularizerChoice::None => "none",
            RegularizerChoice::Weak => "weak",
            RegularizerChoice::Strong => "strong",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizerSpec {
    pub variant: RegularizerChoice,
    pub sketch_dim: usize,
    pub integration_points: usize,
    pub t_max: f64,
    pub alpha: f64,
    pub resample_policy: ResamplePolicy,
    /// Hidden layers (1-based) whose outputs are regularized; the losses are
    /// summed. Empty means the penultimate layer.
    pub attach_layers: Vec<usize>,
}

impl Default for RegularizerSpec {
    fn default() -> Self {
        let base = SigregConfig::default();
        RegularizerSpec {
            variant: RegularizerChoice::None,
            sketch_dim: base.sketch_dim,
            integration_points: base.integration_points,
            t_max: base.t_max,
            alpha: base.alpha,
            resample_policy: base.resample_policy,
            attach_layers: Vec::new(),
        }
    }
}

impl RegularizerSpec {
    /// `None` when the run is unregularized.
    pub fn sigreg(&self) -> Option<SigregConfig> {
        let variant = match self.variant {
            RegularizerChoice::None => return None,
            RegularizerChoice::Weak => Variant::Weak,
            RegularizerChoice::Strong => Variant::Strong,
        };
        Some(SigregConfig {
            variant,
            sketch_dim: self.sketch_dim,
            integration_points: self.integration_points,
            t_max: self.t_max,
            alpha: self.alpha,
            resample_policy: self.resample_policy,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_every: usize,
    /// Rows of the test set used for the spectral diagnostics.
    pub diagnostic_rows: usize,
    pub output: Option<PathBuf>,
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub sgd: SgdConfig,
    pub sigreg: RegularizerSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: "run".into(),
            seed: 0,
            epochs: 30,
            batch_size: 128,
            eval_every: 1,
            diagnostic_rows: 2048,
            output: None,
            dataset: DatasetSpec::default(),
            model: ModelSpec::default(),
            sgd: SgdConfig::default(),
            sigreg: RegularizerSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(format!("batch_size must be >= 2, got {}", self.batch_size)));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        if self.diagnostic_rows < 2 {
            return Err(Error::Config("diagnostic_rows must be >= 2".into()));
        }
        self.sgd.validate()?;
        let (depth, _) = self.model.resolve()?;
        if let Some(cfg) = self.sigreg.sigreg() {
            cfg.validate()?;
        }
        if let Some(&bad) = self.sigreg.attach_layers.iter().find(|&&l| l == 0 || l >= depth) {
            return Err(Error::LayerOutOfRange {
                index: bad,
                max: depth - 1,
            });
        }
        match &self.dataset {
            DatasetSpec::Synthetic {
                num_classes,
                per_class,
                dim,
                spread,
                test_fraction,
            } => {
                if *num_classes == 0 || *per_class == 0 || *dim == 0 || !(*spread >= 0.0) {
                    return Err(Error::Config("synthetic dataset needs positive counts and spread >= 0".into()));
                }
                if !(0.0..1.0).contains(test_fraction) || *test_fraction == 0.0 {
                    return Err(Error::Config("test_fraction must be in (0, 1)".into()));
                }
            }
            DatasetSpec::Cifar { .. } => {}
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("parsing config: {e}")))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// Whether the regularizer contributes to the loss.
    pub fn regularized(&self) -> bool {
        self.sigreg.sigreg().is_some_and(|c| c.alpha > 0.0)
    }
}

/// Root directory for outputs: `$SIGREG_OUTPUT_ROOT` or `runs`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Sets a dotted scalar leaf, e.g. `sgd.learning_rate=0.1`. The value is
/// parsed as a TOML literal, falling back to a plain string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override must be KEY=VALUE, got {assignment:?}")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = parse_literal(raw);
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().filter(|l| !l.is_empty()).ok_or_else(|| Error::Config("empty override key".into()))?;
    let mut cursor = table;
    for part in parts {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path {key:?} crosses non-table {part:?}")))?;
    }
    if matches!(cursor.get(leaf), Some(toml::Value::Table(_))) {
        return Err(Error::Config(format!("override {key:?} targets a table, not a scalar")));
    }
    cursor.insert(leaf.to_string(), value);
    Ok(())
}

fn parse_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}
