use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::RngStream;

/// Gaussian class mixture: class means `~ N(0, spread²·I)`, samples
/// `~ N(mean, I)`. Row `i` belongs to class `i mod num_classes`. Features are
/// returned unnormalized.
pub fn synth_gaussian_classes(
    rng: &mut RngStream,
    num_classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
) -> Result<Dataset> {
    if num_classes == 0 || per_class == 0 || dim == 0 {
        return Err(Error::Config("synthetic dataset counts must be >= 1".into()));
    }
    if !(spread >= 0.0) {
        return Err(Error::Config(format!("spread must be >= 0, got {spread}")));
    }
    let means: Vec<f64> = (0..num_classes * dim).map(|_| spread * rng.normal()).collect();
    let total = num_classes * per_class;
    let mut features = Vec::with_capacity(total * dim);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let class = i % num_classes;
        let mean = &means[class * dim..(class + 1) * dim];
        features.extend(mean.iter().map(|m| m + rng.normal()));
        labels.push(class);
    }
    Dataset::new(
        format!("synth-{num_classes}x{per_class}-d{dim}-s{spread}"),
        dim,
        features,
        labels,
        num_classes,
    )
}
