use crate::error::{Error, Result};
use crate::linalg::matrix::{matmul, matmul_bt, Matrix};
use crate::linalg::rng::RngStream;

/// Gaussian random projection `S ∈ R^{k×c}` with entries `N(0, 1) / √c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchMatrix {
    entries: Matrix,
}

impl SketchMatrix {
    /// Wraps an explicit `k×c` projection. Requires `k <= c`.
    pub fn from_entries(entries: Matrix) -> Result<Self> {
        if entries.rows() > entries.cols() {
            return Err(Error::InvalidSketch {
                k: entries.rows(),
                c: entries.cols(),
            });
        }
        Ok(SketchMatrix { entries })
    }

    pub fn k(&self) -> usize {
        self.entries.rows()
    }

    pub fn c(&self) -> usize {
        self.entries.cols()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// `z Sᵀ`: maps an `N×c` batch to `N×k`.
    pub fn project(&self, z: &Matrix) -> Result<Matrix> {
        matmul_bt(z, &self.entries)
    }

    /// `g S`: pulls an `N×k` gradient back to `N×c`.
    pub fn pull_back(&self, grad: &Matrix) -> Result<Matrix> {
        matmul(grad, &self.entries)
    }
}

/// Draws a `k×c` sketch from `rng`. Requires `1 <= k <= c`.
pub fn draw_sketch(rng: &mut RngStream, k: usize, c: usize) -> Result<SketchMatrix> {
    if k == 0 || k > c {
        return Err(Error::InvalidSketch { k, c });
    }
    Ok(SketchMatrix {
        entries: gaussian_matrix(rng, k, c, 1.0 / (c as f64).sqrt()),
    })
}

/// `rows×cols` matrix of i.i.d. `N(0, scale²)` entries, filled row-major.
pub fn gaussian_matrix(rng: &mut RngStream, rows: usize, cols: usize, scale: f64) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.normal() * scale).collect();
    Matrix::from_vec(rows, cols, data).expect("positive dims")
}
