//! Sketched isotropic Gaussian regularization for dense networks.
//!
//! The crate provides the weak (sketched covariance) and strong (sketched
//! characteristic function) regularizers with analytic gradients, a minimal
//! ReLU MLP trained with plain SGD and global-norm clipping, collapse
//! diagnostics, dataset loaders, and the experiment harness behind the
//! `sigreg` binary.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod regularizers;

pub use error::{Error, Result};
pub use linalg::{Matrix, RngStream};
pub use regularizers::{LossWithGrad, SigregConfig, Variant};
