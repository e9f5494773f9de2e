//! Sketched isotropic Gaussian regularizers.
//!
//! Both losses push a batch of embeddings `Z ∈ R^{N×C}` toward `N(0, I)`:
//!
//! - [`weak_sigreg`] matches only the second moment: the covariance of a
//!   random `K`-dimensional sketch of `Z` is pulled toward `I_K` in Frobenius
//!   norm, never forming a `C×C` matrix.
//! - [`strong_sigreg`] matches the full 1-D marginals along `K` random unit
//!   directions by comparing the empirical characteristic function against
//!   `exp(-t²/2)` on a quadrature grid.
//!
//! Each returns the value and its exact gradient with respect to `Z`.

mod config;
mod quadrature;
mod strong;
mod weak;

pub use config::{ResamplePolicy, SigregConfig, Variant};
pub use quadrature::QuadratureGrid;
pub use strong::{strong_directions, strong_sigreg, strong_sigreg_with_directions};
pub use weak::{weak_sigreg, weak_sigreg_with_sketch};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, RngStream};

/// Scalar loss together with its gradient with respect to the input batch.
#[derive(Clone, Debug, PartialEq)]
pub struct LossWithGrad {
    pub value: f64,
    pub grad: Matrix,
}

/// Evaluates the variant selected by `cfg`.
pub fn sigreg(z: &Matrix, cfg: &SigregConfig, rng: &mut RngStream) -> Result<LossWithGrad> {
    match cfg.variant {
        Variant::Weak => weak_sigreg(z, cfg, rng),
        Variant::Strong => strong_sigreg(z, cfg, rng),
    }
}

/// `task + alpha * reg`, with gradients summed entrywise.
pub fn combined_loss(task: &LossWithGrad, reg: &LossWithGrad, alpha: f64) -> Result<LossWithGrad> {
    if task.grad.shape() != reg.grad.shape() {
        return Err(Error::ShapeMismatch {
            op: "combined_loss",
            left: task.grad.shape(),
            right: reg.grad.shape(),
        });
    }
    if alpha == 0.0 {
        return Ok(task.clone());
    }
    let mut grad = task.grad.clone();
    grad.add_scaled(&reg.grad, alpha)?;
    Ok(LossWithGrad {
        value: task.value + alpha * reg.value,
        grad,
    })
}

/// Returns the stream a loss evaluation should draw from: the caller's own
/// stream for [`ResamplePolicy::PerStep`], or a throwaway copy for
/// [`ResamplePolicy::Fixed`] so every call sees the same draw.
fn draw_stream<'a>(
    policy: ResamplePolicy,
    rng: &'a mut RngStream,
    scratch: &'a mut Option<RngStream>,
) -> &'a mut RngStream {
    match policy {
        ResamplePolicy::PerStep => rng,
        ResamplePolicy::Fixed => scratch.insert(rng.clone()),
    }
}

fn check_batch(z: &Matrix) -> Result<()> {
    if z.rows() < 2 {
        return Err(Error::DegenerateBatch { rows: z.rows() });
    }
    Ok(())
}
