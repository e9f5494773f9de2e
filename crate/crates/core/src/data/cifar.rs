//! CIFAR-10 / CIFAR-100 binary record files.
//!
//! CIFAR-10 records are 3073 bytes: one label byte then 3072 pixel bytes
//! (1024 red, 1024 green, 1024 blue, each row-major 32×32). CIFAR-100 records
//! are 3074 bytes: a coarse label byte, a fine label byte, then the same 3072
//! pixel bytes. Only fine labels are kept for CIFAR-100.
//! See <https://www.cs.toronto.edu/~kriz/cifar.html>.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

const PIXELS: usize = 3072;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CifarVariant {
    Cifar10,
    Cifar100,
}

impl CifarVariant {
    pub fn record_size(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 1 + PIXELS,
            CifarVariant::Cifar100 => 2 + PIXELS,
        }
    }

    pub fn num_classes(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 10,
            CifarVariant::Cifar100 => 100,
        }
    }

    fn label_offset(self) -> usize {
        match self {
            CifarVariant::Cifar10 => 0,
            CifarVariant::Cifar100 => 1,
        }
    }
}

/// Parses records from `bytes`, pixels scaled to `[0, 1]`, without
/// normalization.
pub fn parse_cifar(bytes: &[u8], variant: CifarVariant, limit: Option<usize>, name: &str) -> Result<Dataset> {
    let rec = variant.record_size();
    let whole = bytes.len() / rec;
    if !bytes.len().is_multiple_of(rec) {
        return Err(Error::Format {
            offset: (whole * rec) as u64,
            message: format!(
                "truncated record: {} trailing bytes, records are {rec} bytes",
                bytes.len() % rec
            ),
        });
    }
    let count = limit.map_or(whole, |l| l.min(whole));
    let mut features = Vec::with_capacity(count * PIXELS);
    let mut labels = Vec::with_capacity(count);
    for (i, record) in bytes.chunks_exact(rec).take(count).enumerate() {
        let label = record[variant.label_offset()] as usize;
        if label >= variant.num_classes() {
            return Err(Error::Format {
                offset: (i * rec + variant.label_offset()) as u64,
                message: format!("label {label} out of range for {} classes", variant.num_classes()),
            });
        }
        labels.push(label);
        let pixels = &record[rec - PIXELS..];
        features.extend(pixels.iter().map(|&p| f64::from(p) / 255.0));
    }
    Dataset::new(name, PIXELS, features, labels, variant.num_classes())
}

/// Reads a record file with pixels in `[0, 1]`, unnormalized.
pub fn load_cifar_raw(path: &Path, variant: CifarVariant, limit: Option<usize>) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cifar".into());
    parse_cifar(&bytes, variant, limit, &name)
}

/// Reads a record file and normalizes each pixel column with its own mean
/// and standard deviation. `limit` keeps the first records of the file.
pub fn load_cifar_binary(path: &Path, variant: CifarVariant, limit: Option<usize>) -> Result<Dataset> {
    let mut ds = load_cifar_raw(path, variant, limit)?;
    ds.normalize();
    Ok(ds)
}
