use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::regularizers::LossWithGrad;

/// Mean softmax cross-entropy over the batch; gradient is `(softmax − onehot)/N`.
pub fn cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<LossWithGrad> {
    let (n, classes) = logits.shape();
    if labels.len() != n {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            left: logits.shape(),
            right: (labels.len(), 1),
        });
    }
    let mut grad = Matrix::zeros(n, classes);
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::LabelOutOfRange {
                row: i,
                label,
                num_classes: classes,
            });
        }
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
        let log_sum = sum.ln();
        total += log_sum - (row[label] - max);
        let g = grad.row_mut(i);
        for (gj, z) in g.iter_mut().zip(row) {
            *gj = (z - max).exp() / sum / n as f64;
        }
        g[label] -= 1.0 / n as f64;
    }
    Ok(LossWithGrad {
        value: total / n as f64,
        grad,
    })
}
