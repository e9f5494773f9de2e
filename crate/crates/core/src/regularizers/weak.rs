use crate::error::Result;
use crate::linalg::{
    center_columns, covariance, covariance_divisor, draw_sketch, frobenius_norm, matmul, Matrix,
    RngStream, SketchMatrix,
};
use crate::regularizers::{check_batch, draw_stream, LossWithGrad, SigregConfig};

/// `‖cov(center(Z Sᵀ)) − I‖_F` and its gradient with respect to `Z`.
///
/// A sketch is drawn only when `C > K`; otherwise `Z` is used directly and the
/// target is `I_C`. Auxiliary storage is `O(NK + CK + K²)`.
pub fn weak_sigreg(z: &Matrix, cfg: &SigregConfig, rng: &mut RngStream) -> Result<LossWithGrad> {
    check_batch(z)?;
    cfg.validate()?;
    let sketch = if z.cols() > cfg.sketch_dim {
        let mut scratch = None;
        let stream = draw_stream(cfg.resample_policy, rng, &mut scratch);
        Some(draw_sketch(stream, cfg.sketch_dim, z.cols())?)
    } else {
        None
    };
    weak_sigreg_with_sketch(z, sketch.as_ref())
}

/// Same as [`weak_sigreg`] with an explicit sketch (`None` skips projection).
pub fn weak_sigreg_with_sketch(z: &Matrix, sketch: Option<&SketchMatrix>) -> Result<LossWithGrad> {
    check_batch(z)?;
    let projected;
    let y = match sketch {
        Some(s) => {
            projected = s.project(z)?;
            &projected
        }
        None => z,
    };
    let yc = center_columns(y);
    let mut residual = covariance(&yc)?;
    for i in 0..residual.rows() {
        residual[(i, i)] -= 1.0;
    }
    let value = frobenius_norm(&residual);
    if value == 0.0 {
        return Ok(LossWithGrad {
            value,
            grad: Matrix::zeros(z.rows(), z.cols()),
        });
    }

    // dL/dcov = R/‖R‖; cov = YcᵀYc/d with R symmetric gives dL/dYc = 2·Yc·R/(‖R‖·d).
    let mut grad_y = matmul(&yc, &residual)?;
    grad_y.scale_in_place(2.0 / (value * covariance_divisor(z.rows())));
    // Back through centering: subtract column means of the incoming gradient.
    let grad_y = center_columns(&grad_y);
    let grad = match sketch {
        Some(s) => s.pull_back(&grad_y)?,
        None => grad_y,
    };
    Ok(LossWithGrad { value, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::regularizers::ResamplePolicy;

    #[test]
    fn zero_batch_without_sketch() {
        let z = Matrix::zeros(8, 4);
        let out = weak_sigreg(&z, &SigregConfig::weak(), &mut RngStream::new(0)).unwrap();
        assert_eq!(out.value, 2.0);
        assert_eq!(out.grad, Matrix::zeros(8, 4));
    }

    #[test]
    fn equilateral_triple_is_near_zero() {
        let r = 2.0 / 3f64.sqrt();
        let rows: Vec<Vec<f64>> = [90.0f64, 210.0, 330.0]
            .iter()
            .map(|d| vec![r * d.to_radians().cos(), r * d.to_radians().sin()])
            .collect();
        let z = Matrix::from_rows(&rows).unwrap();
        let out = weak_sigreg(&z, &SigregConfig::weak().with_sketch_dim(2), &mut RngStream::new(0)).unwrap();
        assert!(out.value < 1e-5, "{}", out.value);
    }

    #[test]
    fn degenerate_batch() {
        let z = Matrix::zeros(1, 4);
        assert!(matches!(
            weak_sigreg(&z, &SigregConfig::weak(), &mut RngStream::new(0)),
            Err(Error::DegenerateBatch { rows: 1 })
        ));
    }

    #[test]
    fn per_step_resamples_and_fixed_does_not() {
        let z = Matrix::from_fn(16, 32, |i, j| ((i * 31 + j * 7) % 13) as f64 - 6.0);
        let cfg = SigregConfig::weak().with_sketch_dim(4);
        let mut rng = RngStream::new(1);
        let a = weak_sigreg(&z, &cfg, &mut rng).unwrap();
        let b = weak_sigreg(&z, &cfg, &mut rng).unwrap();
        assert_ne!(a.value, b.value);

        let fixed = cfg.with_policy(ResamplePolicy::Fixed);
        let mut rng = RngStream::new(1);
        let a = weak_sigreg(&z, &fixed, &mut rng).unwrap();
        let b = weak_sigreg(&z, &fixed, &mut rng).unwrap();
        assert_eq!(a, b);
    }
}
