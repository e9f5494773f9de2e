//! Collapse diagnostics and task metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{center_columns, covariance, symmetric_eigenvalues, Matrix};

const NEGATIVE_EIGEN_TOL: f64 = -1e-10;

/// Spectral summary of an embedding batch's covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub effective_rank: f64,
    /// Shannon entropy (nats) of the normalized spectrum.
    pub eigen_entropy: f64,
    /// `λ_max / λ⁺_min`, the smallest eigenvalue above `λ_max · C · ε`.
    pub condition_number: f64,
    pub top_eigen_fraction: f64,
    pub embedding_dim: usize,
}

impl CollapseReport {
    /// Default collapse criterion: effective rank below 10% of the dimension.
    pub fn is_collapsed(&self) -> bool {
        self.effective_rank < 0.1 * self.embedding_dim as f64
    }
}

fn normalized_spectrum(eigenvalues: &[f64]) -> Result<(Vec<f64>, f64)> {
    if let Some(&bad) = eigenvalues.iter().find(|&&l| l < NEGATIVE_EIGEN_TOL || l.is_nan()) {
        return Err(Error::InvalidSpectrum(format!("eigenvalue {bad} below tolerance")));
    }
    let clamped: Vec<f64> = eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedRank);
    }
    Ok((clamped, total))
}

fn entropy(clamped: &[f64], total: f64) -> f64 {
    clamped
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| {
            let p = l / total;
            -p * p.ln()
        })
        .sum()
}

/// `exp(−Σ pᵢ ln pᵢ)` with `pᵢ = λᵢ / Σλ`. Negative entries down to `−1e-10`
/// are clamped to zero.
pub fn effective_rank(eigenvalues: &[f64]) -> Result<f64> {
    let (clamped, total) = normalized_spectrum(eigenvalues)?;
    Ok(entropy(&clamped, total).exp())
}

pub fn collapse_report_from_spectrum(eigenvalues: &[f64]) -> Result<CollapseReport> {
    let (clamped, total) = normalized_spectrum(eigenvalues)?;
    let h = entropy(&clamped, total);
    let max = clamped.iter().copied().fold(0.0, f64::max);
    let floor = max * clamped.len() as f64 * f64::EPSILON;
    let min_pos = clamped
        .iter()
        .copied()
        .filter(|&l| l > floor)
        .fold(f64::INFINITY, f64::min);
    Ok(CollapseReport {
        effective_rank: h.exp(),
        eigen_entropy: h,
        condition_number: max / min_pos,
        top_eigen_fraction: max / total,
        embedding_dim: eigenvalues.len(),
    })
}

/// Diagnostics from the exact `C×C` covariance of the centered batch.
pub fn collapse_report(z: &Matrix) -> Result<CollapseReport> {
    if z.rows() < 2 {
        return Err(Error::DegenerateBatch { rows: z.rows() });
    }
    let cov = covariance(&center_columns(z))?;
    collapse_report_from_spectrum(&symmetric_eigenvalues(&cov)?)
}

/// Fraction of rows whose argmax equals the label. Ties go to the lowest
/// class index.
pub fn top1_accuracy(logits: &Matrix, labels: &[usize]) -> Result<f64> {
    if labels.len() != logits.rows() {
        return Err(Error::ShapeMismatch {
            op: "top1_accuracy",
            left: logits.shape(),
            right: (labels.len(), 1),
        });
    }
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(i, &label)| argmax(logits.row(i)) == label)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}
