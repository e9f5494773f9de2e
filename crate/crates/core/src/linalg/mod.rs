//! Dense linear algebra, deterministic randomness, and Gaussian sketching.

mod eigen;
mod matrix;
mod rng;
mod sketch;

pub use eigen::symmetric_eigenvalues;
pub use matrix::{
    center_columns, covariance, covariance_divisor, frobenius_norm, matmul, matmul_at, matmul_bt,
    Matrix,
};
pub use rng::RngStream;
pub use sketch::{draw_sketch, gaussian_matrix, SketchMatrix};
