//! Helpers shared by the integration tests: batch generators and
//! straight-line reference implementations written without the library's
//! matrix routines.

#![allow(dead_code)]

use sigreg::linalg::Matrix;
use sigreg::RngStream;

pub fn gaussian_batch(rng: &mut RngStream, n: usize, c: usize) -> Matrix {
    Matrix::from_fn(n, c, |_, _| rng.normal())
}

/// Rows `s_n · v` with `s_n ~ N(0, 1)` and `‖v‖² = C`, so the expected row
/// energy matches an i.i.d. `N(0, I)` batch of the same shape.
pub fn rank_one_batch(rng: &mut RngStream, n: usize, c: usize) -> Matrix {
    let mut v: Vec<f64> = (0..c).map(|_| rng.normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x *= (c as f64).sqrt() / norm);
    let s: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    Matrix::from_fn(n, c, |i, j| s[i] * v[j])
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Reference weak loss: project, center, covariance with divisor
/// `N − 1 + 1e-6`, subtract identity, Frobenius norm. `sketch` is `K×C`;
/// `None` uses the batch as is.
pub fn weak_reference(z: &[Vec<f64>], sketch: Option<&[Vec<f64>]>) -> f64 {
    let n = z.len();
    let x: Vec<Vec<f64>> = match sketch {
        Some(s) => z
            .iter()
            .map(|row| s.iter().map(|srow| row.iter().zip(srow).map(|(a, b)| a * b).sum()).collect())
            .collect(),
        None => z.to_vec(),
    };
    let k = x[0].len();
    let mut mean = vec![0.0; k];
    for row in &x {
        for j in 0..k {
            mean[j] += row[j] / n as f64;
        }
    }
    let mut total = 0.0;
    for a in 0..k {
        for b in 0..k {
            let mut cov = 0.0;
            for row in &x {
                cov += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
            cov /= n as f64 - 1.0 + 1e-6;
            let target = if a == b { 1.0 } else { 0.0 };
            total += (cov - target) * (cov - target);
        }
    }
    total.sqrt()
}

/// Trapezoid points and Gaussian-density weights on `[−t_max, t_max]`.
pub fn reference_grid(points: usize, t_max: f64) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * t_max / (points - 1) as f64;
    let t: Vec<f64> = (0..points).map(|j| -t_max + j as f64 * h).collect();
    let w = t
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let end = if j == 0 || j == points - 1 { 0.5 } else { 1.0 };
            end * h * (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
        .collect();
    (t, w)
}

/// Reference strong loss for explicit unit directions (`K×C`).
pub fn strong_reference(z: &[Vec<f64>], directions: &[Vec<f64>], points: usize, t_max: f64) -> f64 {
    let (t, w) = reference_grid(points, t_max);
    let n = z.len() as f64;
    let mut total = 0.0;
    for a in directions {
        let proj: Vec<f64> = z.iter().map(|row| row.iter().zip(a).map(|(x, y)| x * y).sum()).collect();
        for (tj, wj) in t.iter().zip(&w) {
            let re: f64 = proj.iter().map(|p| (tj * p).cos()).sum::<f64>() / n;
            let im: f64 = proj.iter().map(|p| (tj * p).sin()).sum::<f64>() / n;
            let target = (-0.5 * tj * tj).exp();
            total += wj * ((re - target).powi(2) + im * im);
        }
    }
    total / directions.len() as f64
}

/// Central finite differences of `f` at every entry of `z`.
pub fn finite_difference(z: &Matrix, h: f64, mut f: impl FnMut(&Matrix) -> f64) -> Matrix {
    let mut probe = z.clone();
    let mut grad = Matrix::zeros(z.rows(), z.cols());
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            let x = z[(i, j)];
            probe[(i, j)] = x + h;
            let up = f(&probe);
            probe[(i, j)] = x - h;
            let down = f(&probe);
            probe[(i, j)] = x;
            grad[(i, j)] = (up - down) / (2.0 * h);
        }
    }
    grad
}

/// `max|a − b| / max(max|a|, max|b|)`.
pub fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
