//! Datasets: synthetic Gaussian class mixtures and the CIFAR binary format.

mod batch;
mod cifar;
mod synth;

pub use batch::{batch_iterator, Batch};
pub use cifar::{load_cifar_binary, load_cifar_raw, CifarVariant};
pub use synth::synth_gaussian_classes;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, RngStream};

/// Per-dimension affine normalization `(x − mean) / std`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    /// Column statistics of row-major `features` with `dim` columns. Constant
    /// columns get `std = 1`.
    pub fn fit(features: &[f64], dim: usize) -> Option<Self> {
        let rows = features.len() / dim;
        if rows == 0 {
            return None;
        }
        let mut mean = vec![0.0; dim];
        for row in features.chunks_exact(dim) {
            mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= rows as f64);
        let mut var = vec![0.0; dim];
        for row in features.chunks_exact(dim) {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / rows as f64).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Some(Normalization { mean, std })
    }

    pub fn apply(&self, features: &mut [f64]) {
        for row in features.chunks_exact_mut(self.mean.len()) {
            for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *x = (*x - m) / s;
            }
        }
    }

    pub fn invert(&self, features: &mut [f64]) {
        for row in features.chunks_exact_mut(self.mean.len()) {
            for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *x = *x * s + m;
            }
        }
    }
}

/// Labelled feature rows. Stored flat so that an empty dataset is
/// representable.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    dim: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::Config(format!(
                "dataset needs {} features for {} rows of dim {dim}, got {}",
                labels.len() * dim,
                labels.len(),
                features.len()
            )));
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::LabelOutOfRange { row, label, num_classes });
        }
        Ok(Dataset {
            name: name.into(),
            dim,
            features,
            labels,
            num_classes,
            normalization: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// All rows as an `M×D` matrix; `None` when empty.
    pub fn feature_matrix(&self) -> Option<Matrix> {
        Matrix::from_vec(self.len(), self.dim, self.features.clone()).ok()
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    /// Fits a normalization on this dataset and applies it.
    pub fn normalize(&mut self) -> Option<Normalization> {
        let norm = Normalization::fit(&self.features, self.dim)?;
        self.normalize_with(&norm);
        Some(norm)
    }

    /// Applies a normalization fitted elsewhere (e.g. on the train split).
    pub fn normalize_with(&mut self, norm: &Normalization) {
        norm.apply(&mut self.features);
        self.normalization = Some(norm.clone());
    }

    /// Undoes the recorded normalization, if any.
    pub fn denormalized_features(&self) -> Vec<f64> {
        let mut f = self.features.clone();
        if let Some(n) = &self.normalization {
            n.invert(&mut f);
        }
        f
    }

    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Dataset {
            name: name.into(),
            dim: self.dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            normalization: self.normalization.clone(),
        }
    }

    /// Keeps the first `n` rows.
    pub fn truncate(&mut self, n: usize) {
        if n < self.len() {
            self.labels.truncate(n);
            self.features.truncate(n * self.dim);
        }
    }

    /// Random `(train, test)` split with `⌊M · test_fraction⌋` test rows.
    pub fn split(&self, test_fraction: f64, rng: &mut RngStream) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::Config(format!("test_fraction must be in [0, 1), got {test_fraction}")));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        rng.shuffle(&mut idx);
        let n_test = (self.len() as f64 * test_fraction).floor() as usize;
        let (test, train) = idx.split_at(n_test);
        Ok((
            self.subset(train, format!("{}-train", self.name)),
            self.subset(test, format!("{}-test", self.name)),
        ))
    }
}
