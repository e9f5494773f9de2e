use crate::error::Result;
use crate::linalg::{gaussian_matrix, matmul, matmul_bt, Matrix, RngStream};
use crate::regularizers::{check_batch, draw_stream, LossWithGrad, QuadratureGrid, SigregConfig};

/// `K` Gaussian directions in `R^C`, each normalized to unit length.
///
/// `K` may exceed `C`: each row is an independent 1-D projection, not a
/// basis, so no up-projection takes place.
pub fn strong_directions(rng: &mut RngStream, k: usize, c: usize) -> Matrix {
    let mut a = gaussian_matrix(rng, k, c, 1.0);
    for i in 0..k {
        let row = a.row_mut(i);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        row.iter_mut().for_each(|x| *x /= norm);
    }
    a
}

/// Characteristic-function distance between each projected marginal of `Z`
/// and the standard normal, averaged over directions:
///
/// `(1/K) Σ_k Σ_j w_j |φ̂_k(t_j) − exp(−t_j²/2)|²` with
/// `φ̂_k(t) = (1/N) Σ_n exp(i t ⟨z_n, a_k⟩)`.
pub fn strong_sigreg(z: &Matrix, cfg: &SigregConfig, rng: &mut RngStream) -> Result<LossWithGrad> {
    check_batch(z)?;
    cfg.validate()?;
    let grid = QuadratureGrid::gaussian_trapezoid(cfg.integration_points, cfg.t_max)?;
    let mut scratch = None;
    let stream = draw_stream(cfg.resample_policy, rng, &mut scratch);
    let directions = strong_directions(stream, cfg.sketch_dim, z.cols());
    strong_sigreg_with_directions(z, &directions, &grid)
}

/// [`strong_sigreg`] with explicit unit directions (`K×C`) and grid.
pub fn strong_sigreg_with_directions(
    z: &Matrix,
    directions: &Matrix,
    grid: &QuadratureGrid,
) -> Result<LossWithGrad> {
    check_batch(z)?;
    let proj = matmul_bt(z, directions)?;
    let (n, k) = proj.shape();
    let inv_n = 1.0 / n as f64;
    let inv_k = 1.0 / k as f64;
    let targets: Vec<f64> = grid.points().iter().map(|t| (-0.5 * t * t).exp()).collect();

    let mut value = 0.0;
    let mut grad_proj = Matrix::zeros(n, k);
    let mut cos_buf = vec![0.0; n];
    let mut sin_buf = vec![0.0; n];
    for dir in 0..k {
        for ((&t, &w), &target) in grid.points().iter().zip(grid.weights()).zip(&targets) {
            let mut re = 0.0;
            let mut im = 0.0;
            for row in 0..n {
                let (s, c) = (t * proj[(row, dir)]).sin_cos();
                sin_buf[row] = s;
                cos_buf[row] = c;
                re += c;
                im += s;
            }
            re *= inv_n;
            im *= inv_n;
            let diff = re - target;
            value += w * (diff * diff + im * im);

            // d/dp_n of (re − g)² + im² = 2t/N · (−(re − g)·sin(t p_n) + im·cos(t p_n))
            let coef = 2.0 * w * t * inv_n * inv_k;
            for row in 0..n {
                grad_proj[(row, dir)] += coef * (im * cos_buf[row] - diff * sin_buf[row]);
            }
        }
    }
    value *= inv_k;
    let grad = matmul(&grad_proj, directions)?;
    Ok(LossWithGrad { value, grad })
}
