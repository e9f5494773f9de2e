//! Plain ReLU multilayer perceptron with exact reverse-mode gradients.
//!
//! There are no normalization layers, residual connections or dropout: each
//! layer is `a_{l+1} = relu(a_l W_lᵀ + b_l)`, with the final layer left linear.

mod checkpoint;
mod loss;
mod optim;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::cross_entropy;
pub use optim::{clip_global_norm, Sgd, SgdConfig};

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_at, matmul_bt, Matrix, RngStream};

#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    widths: Vec<usize>,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Activations cached by [`forward`] for [`backward`].
///
/// `inputs[l]` is the input to layer `l` (so `inputs[0]` is the batch and
/// `inputs[l]` for `l >= 1` is the ReLU output of hidden layer `l`).
/// `pre_activations[l]` is `inputs[l] W_lᵀ + b_l`; the last one is the logits.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub inputs: Vec<Matrix>,
    pub pre_activations: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &Matrix {
        self.pre_activations.last().expect("non-empty trace")
    }

    /// Post-ReLU output of hidden layer `index` (1-based; `depth - 1` is the
    /// penultimate representation).
    pub fn hidden(&self, index: usize) -> Result<&Matrix> {
        let max = self.inputs.len() - 1;
        if index == 0 || index > max {
            return Err(Error::LayerOutOfRange { index, max });
        }
        Ok(&self.inputs[index])
    }

    pub fn depth(&self) -> usize {
        self.pre_activations.len()
    }
}

/// Per-parameter gradients, laid out like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            weights: model.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.values().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        self.weights.iter_mut().for_each(|w| w.scale_in_place(s));
        self.biases.iter_mut().flatten().for_each(|b| *b *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    /// All entries, weights then bias per layer, in layer order.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.as_slice().iter().chain(b.iter()).copied())
    }
}

/// One line per layer; the stress-test preset is audited through this.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerDescription {
    pub kind: &'static str,
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: &'static str,
}

impl MlpModel {
    /// He-normal weights (`std = √(2 / fan_in)`) and zero biases. Layer `l`
    /// draws from its own substream of `rng`.
    pub fn he_init(widths: &[usize], rng: &RngStream) -> Result<Self> {
        validate_widths(widths)?;
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        for (l, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let mut stream = rng.substream(&format!("layer{l}"));
            let std = (2.0 / fan_in as f64).sqrt();
            weights.push(crate::linalg::gaussian_matrix(&mut stream, fan_out, fan_in, std));
            biases.push(vec![0.0; fan_out]);
        }
        Ok(MlpModel {
            widths: widths.to_vec(),
            weights,
            biases,
        })
    }

    pub fn from_parts(widths: Vec<usize>, weights: Vec<Matrix>, biases: Vec<Vec<f64>>) -> Result<Self> {
        validate_widths(&widths)?;
        if weights.len() != widths.len() - 1 || biases.len() != weights.len() {
            return Err(Error::InvalidMatrix(format!(
                "{} widths need {} weight/bias pairs, got {}/{}",
                widths.len(),
                widths.len() - 1,
                weights.len(),
                biases.len()
            )));
        }
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.shape() != (widths[l + 1], widths[l]) || b.len() != widths[l + 1] {
                return Err(Error::ShapeMismatch {
                    op: "MlpModel::from_parts",
                    left: w.shape(),
                    right: (widths[l + 1], widths[l]),
                });
            }
        }
        Ok(MlpModel { widths, weights, biases })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Number of dense layers.
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.iter().map(|w| w.rows() * w.cols()).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Index of the last hidden layer, the default regularizer attachment.
    pub fn penultimate(&self) -> usize {
        self.depth() - 1
    }

    pub fn describe(&self) -> Vec<LayerDescription> {
        self.widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| LayerDescription {
                kind: "dense",
                fan_in: w[0],
                fan_out: w[1],
                activation: if l + 1 == self.depth() { "identity" } else { "relu" },
            })
            .collect()
    }

    /// Flat parameter vector in [`Gradients::values`] order.
    pub fn parameters(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.as_slice().iter().chain(b.iter()).copied())
            .collect()
    }

    /// Mutable access to the `index`-th entry of [`MlpModel::parameters`].
    pub fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let wn = w.rows() * w.cols();
            if index < wn {
                return &mut w.as_mut_slice()[index];
            }
            index -= wn;
            if index < b.len() {
                return &mut b[index];
            }
            index -= b.len();
        }
        panic!("parameter index out of range");
    }
}

fn validate_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(Error::Config(format!(
            "layer widths need at least input and output, all positive: {widths:?}"
        )));
    }
    Ok(())
}

pub fn forward(model: &MlpModel, batch: &Matrix) -> Result<ForwardTrace> {
    if batch.cols() != model.widths[0] {
        return Err(Error::ShapeMismatch {
            op: "forward",
            left: batch.shape(),
            right: (batch.rows(), model.widths[0]),
        });
    }
    let depth = model.depth();
    let mut inputs = Vec::with_capacity(depth);
    let mut pre_activations = Vec::with_capacity(depth);
    inputs.push(batch.clone());
    for (l, (w, b)) in model.weights.iter().zip(&model.biases).enumerate() {
        let mut z = matmul_bt(&inputs[l], w)?;
        for i in 0..z.rows() {
            for (v, bias) in z.row_mut(i).iter_mut().zip(b) {
                *v += bias;
            }
        }
        if l + 1 < depth {
            inputs.push(z.map(|v| v.max(0.0)));
        }
        pre_activations.push(z);
    }
    Ok(ForwardTrace {
        inputs,
        pre_activations,
    })
}

/// Reverse-mode gradients of a loss whose gradient with respect to the logits
/// is `head_grad`. Each `(layer, grad)` in `injected` adds a gradient with
/// respect to the output of hidden layer `layer` (see [`ForwardTrace::hidden`])
/// before propagation continues below it.
pub fn backward(
    model: &MlpModel,
    trace: &ForwardTrace,
    head_grad: &Matrix,
    injected: &[(usize, &Matrix)],
) -> Result<Gradients> {
    let depth = model.depth();
    if trace.depth() != depth {
        return Err(Error::LayerOutOfRange {
            index: trace.depth(),
            max: depth,
        });
    }
    if head_grad.shape() != trace.logits().shape() {
        return Err(Error::ShapeMismatch {
            op: "backward(head)",
            left: head_grad.shape(),
            right: trace.logits().shape(),
        });
    }
    for &(layer, g) in injected {
        let target = trace.hidden(layer)?;
        if g.shape() != target.shape() {
            return Err(Error::ShapeMismatch {
                op: "backward(injected)",
                left: g.shape(),
                right: target.shape(),
            });
        }
    }

    let mut grads = Gradients::zeros_like(model);
    let mut delta = head_grad.clone();
    for l in (0..depth).rev() {
        grads.weights[l] = matmul_at(&delta, &trace.inputs[l])?;
        let bias_grad = &mut grads.biases[l];
        for i in 0..delta.rows() {
            for (g, d) in bias_grad.iter_mut().zip(delta.row(i)) {
                *g += d;
            }
        }
        if l == 0 {
            break;
        }
        let mut upstream = matmul(&delta, &model.weights[l])?;
        for &(layer, g) in injected {
            if layer == l {
                upstream.add_scaled(g, 1.0)?;
            }
        }
        let pre = &trace.pre_activations[l - 1];
        for (u, &z) in upstream.as_mut_slice().iter_mut().zip(pre.as_slice()) {
            if z <= 0.0 {
                *u = 0.0;
            }
        }
        delta = upstream;
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_model() -> MlpModel {
        MlpModel::from_parts(
            vec![2, 2, 1],
            vec![Matrix::identity(2), Matrix::from_rows(&[vec![1.0, -2.0]]).unwrap()],
            vec![vec![0.0, 0.0], vec![0.5]],
        )
        .unwrap()
    }

    #[test]
    fn identity_hidden_layer_passes_nonnegative_input() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 0.0]]).unwrap();
        let t = forward(&tiny_model(), &x).unwrap();
        assert_eq!(t.hidden(1).unwrap(), &x);
        assert_eq!(t.logits().as_slice(), &[1.0 - 4.0 + 0.5, 3.0 + 0.5]);
    }

    #[test]
    fn negative_preactivations_are_zeroed() {
        let x = Matrix::from_rows(&[vec![-1.0, -2.0]]).unwrap();
        let t = forward(&tiny_model(), &x).unwrap();
        assert_eq!(t.hidden(1).unwrap().as_slice(), &[0.0, 0.0]);
        assert_eq!(t.logits().as_slice(), &[0.5]);
    }

    #[test]
    fn forward_shape_mismatch() {
        let x = Matrix::zeros(2, 3);
        assert!(matches!(forward(&tiny_model(), &x), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn zero_injection_is_noop_and_bad_index_errors() {
        let model = MlpModel::he_init(&[3, 4, 4, 2], &RngStream::new(1)).unwrap();
        let x = Matrix::from_fn(5, 3, |i, j| (i as f64 - j as f64) * 0.4);
        let t = forward(&model, &x).unwrap();
        let head = Matrix::from_fn(5, 2, |i, j| (i + j) as f64 * 0.1);
        let plain = backward(&model, &t, &head, &[]).unwrap();
        let zero = Matrix::zeros(5, 4);
        assert_eq!(backward(&model, &t, &head, &[(2, &zero)]).unwrap(), plain);
        assert!(matches!(
            backward(&model, &t, &head, &[(3, &zero)]),
            Err(Error::LayerOutOfRange { index: 3, max: 2 })
        ));
        assert!(backward(&model, &t, &head, &[(0, &zero)]).is_err());
    }

    #[test]
    fn description_has_only_dense_layers() {
        let model = MlpModel::he_init(&[8, 16, 16, 3], &RngStream::new(0)).unwrap();
        let d = model.describe();
        assert_eq!(d.len(), 3);
        assert!(d.iter().all(|l| l.kind == "dense"));
        assert_eq!(d[2].activation, "identity");
        assert_eq!(model.num_parameters(), model.parameters().len());
    }

    #[test]
    fn he_init_scale() {
        let model = MlpModel::he_init(&[400, 300], &RngStream::new(3)).unwrap();
        let w = &model.weights()[0];
        let var = w.sum_sq() / (w.rows() * w.cols()) as f64;
        assert!((var - 2.0 / 400.0).abs() < 0.05 * 2.0 / 400.0, "{var}");
    }
}
