use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, RngStream};

/// One mini-batch: features and the matching labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub indices: Vec<usize>,
}

/// One epoch of shuffled, equally sized batches. The permutation is drawn
/// from `rng` up front; the trailing partial batch is dropped.
pub fn batch_iterator<'a>(
    ds: &'a Dataset,
    batch_size: usize,
    rng: &mut RngStream,
) -> Result<impl Iterator<Item = Batch> + 'a> {
    if batch_size < 2 {
        return Err(Error::Config(format!("batch_size must be >= 2, got {batch_size}")));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    rng.shuffle(&mut order);
    let full = ds.len() / batch_size;
    order.truncate(full * batch_size);
    Ok((0..full).map(move |b| {
        let indices = order[b * batch_size..(b + 1) * batch_size].to_vec();
        let mut data = Vec::with_capacity(batch_size * ds.dim());
        for &i in &indices {
            data.extend_from_slice(ds.row(i));
        }
        Batch {
            features: Matrix::from_vec(batch_size, ds.dim(), data).expect("non-empty batch"),
            labels: indices.iter().map(|&i| ds.labels()[i]).collect(),
            indices,
        }
    }))
}
