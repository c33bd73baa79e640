use rand::Rng;

use super::{axpy, dot, Matrix};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    Tanh,
}

/// Flat view of every weight and bias of an [`Mlp`].
///
/// Layers are laid out in order. Each layer with `n_in` inputs and `n_out`
/// outputs contributes `n_in * n_out` weights stored input-major (the weight
/// from input `i` to unit `o` lives at `i * n_out + o`), followed by its
/// `n_out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParameterVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        ParameterVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Activations recorded by a batched forward pass; `activations[0]` is the
/// input batch and the last entry is the network output.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Matrix>,
}

impl ForwardTrace {
    /// The input, then every layer's post-activation output.
    pub fn activations(&self) -> &[Matrix] {
        &self.activations
    }

    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("trace holds at least the input")
    }

    pub fn into_output(mut self) -> Matrix {
        self.activations.pop().expect("trace holds at least the input")
    }
}

/// Feedforward network with rectifier hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    output_activation: OutputActivation,
    params: ParameterVector,
}

struct LayerView<'a> {
    n_in: usize,
    n_out: usize,
    weights: &'a [f64],
    bias: &'a [f64],
}

impl Mlp {
    pub fn param_count(layer_sizes: &[usize]) -> usize {
        layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
        if layer_sizes.len() < 2 {
            return Err(Error::invalid(
                "layer_sizes",
                "need at least an input and an output layer",
            ));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::invalid("layer_sizes", "layer sizes must be positive"));
        }
        Ok(())
    }

    /// Weights and biases uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn new<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        output_activation: OutputActivation,
        rng: &mut R,
    ) -> Result<Self> {
        Self::validate_sizes(layer_sizes)?;
        let mut values = Vec::with_capacity(Self::param_count(layer_sizes));
        for w in layer_sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                values.push(rng.random_range(-bound..=bound));
            }
        }
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            output_activation,
            params: ParameterVector(values),
        })
    }

    pub fn zeros(layer_sizes: &[usize], output_activation: OutputActivation) -> Result<Self> {
        Self::validate_sizes(layer_sizes)?;
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            output_activation,
            params: ParameterVector::zeros(Self::param_count(layer_sizes)),
        })
    }

    pub fn from_params(
        layer_sizes: &[usize],
        output_activation: OutputActivation,
        params: ParameterVector,
    ) -> Result<Self> {
        Self::validate_sizes(layer_sizes)?;
        check_dim("Mlp::from_params", Self::param_count(layer_sizes), params.len())?;
        Ok(Mlp {
            layer_sizes: layer_sizes.to_vec(),
            output_activation,
            params,
        })
    }

    /// Build from per-layer `(weights, bias)` with weights shaped
    /// `n_out x n_in` (row `o` holds the weights into unit `o`).
    pub fn from_layers(layers: &[(Matrix, Vec<f64>)], output_activation: OutputActivation) -> Result<Self> {
        let mut sizes = Vec::with_capacity(layers.len() + 1);
        let mut values = Vec::new();
        for (idx, (w, b)) in layers.iter().enumerate() {
            if idx == 0 {
                sizes.push(w.cols());
            } else {
                check_dim("Mlp::from_layers fan-in", sizes[idx], w.cols())?;
            }
            check_dim("Mlp::from_layers bias", w.rows(), b.len())?;
            sizes.push(w.rows());
            values.extend_from_slice(w.transpose().data());
            values.extend_from_slice(b);
        }
        Self::from_params(&sizes, output_activation, ParameterVector(values))
    }

    /// Inverse of [`Mlp::from_layers`].
    pub fn to_layers(&self) -> Vec<(Matrix, Vec<f64>)> {
        self.layer_views()
            .map(|l| {
                let w_in_major = Matrix::new(l.n_in, l.n_out, l.weights.to_vec())
                    .expect("layer view matches its own shape");
                (w_in_major.transpose(), l.bias.to_vec())
            })
            .collect()
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output_activation
    }

    pub fn params(&self) -> &ParameterVector {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterVector {
        &mut self.params
    }

    pub fn set_params(&mut self, params: ParameterVector) -> Result<()> {
        check_dim("Mlp::set_params", self.params.len(), params.len())?;
        self.params = params;
        Ok(())
    }

    pub fn same_architecture(&self, other: &Mlp) -> bool {
        self.layer_sizes == other.layer_sizes && self.output_activation == other.output_activation
    }

    fn layer_views(&self) -> impl Iterator<Item = LayerView<'_>> + '_ {
        let mut offset = 0;
        self.layer_sizes.windows(2).map(move |w| {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params.0[offset..offset + n_in * n_out];
            let bias = &self.params.0[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            LayerView {
                n_in,
                n_out,
                weights,
                bias,
            }
        })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = Matrix::new(1, input.len(), input.to_vec())?;
        Ok(self.forward_batch(&x)?.into_data())
    }

    /// Row-wise forward pass over a batch.
    pub fn forward_batch(&self, inputs: &Matrix) -> Result<Matrix> {
        Ok(self.forward_trace(inputs)?.into_output())
    }

    pub fn forward_trace(&self, inputs: &Matrix) -> Result<ForwardTrace> {
        check_dim("Mlp::forward input", self.input_dim(), inputs.cols())?;
        let n_layers = self.layer_sizes.len() - 1;
        let batch = inputs.rows();
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(inputs.clone());
        for (idx, layer) in self.layer_views().enumerate() {
            let x = activations.last().expect("non-empty");
            let mut out = Matrix::zeros(batch, layer.n_out);
            for b in 0..batch {
                let row = out.row_mut(b);
                row.copy_from_slice(layer.bias);
                for (i, &xi) in x.row(b).iter().enumerate() {
                    if xi != 0.0 {
                        axpy(xi, &layer.weights[i * layer.n_out..(i + 1) * layer.n_out], row);
                    }
                }
            }
            let last = idx + 1 == n_layers;
            if !last {
                for v in out.data_mut() {
                    *v = v.max(0.0);
                }
            } else if self.output_activation == OutputActivation::Tanh {
                for v in out.data_mut() {
                    *v = v.tanh();
                }
            }
            activations.push(out);
        }
        Ok(ForwardTrace { activations })
    }

    /// Backpropagate `output_grads` (dLoss/dOutput, one row per sample)
    /// through a recorded forward pass. Parameter gradients are summed over
    /// the batch into `param_grad` when given. Returns dLoss/dInput when
    /// requested.
    pub fn backward_trace(
        &self,
        trace: &ForwardTrace,
        output_grads: &Matrix,
        mut param_grad: Option<&mut [f64]>,
        want_input_grad: bool,
    ) -> Result<Option<Matrix>> {
        if let Some(g) = param_grad.as_deref() {
            check_dim("Mlp::backward param_grad", self.params.len(), g.len())?;
        }
        check_dim("Mlp::backward output_grad", self.output_dim(), output_grads.cols())?;
        check_dim("Mlp::backward batch", trace.output().rows(), output_grads.rows())?;
        let n_layers = self.layer_sizes.len() - 1;
        let batch = output_grads.rows();

        let mut delta = output_grads.clone();
        if self.output_activation == OutputActivation::Tanh {
            for (d, y) in delta.data_mut().iter_mut().zip(trace.output().data()) {
                *d *= 1.0 - y * y;
            }
        }

        let views: Vec<LayerView<'_>> = self.layer_views().collect();
        let mut offsets = Vec::with_capacity(n_layers);
        let mut acc = 0;
        for l in &views {
            offsets.push(acc);
            acc += l.n_in * l.n_out + l.n_out;
        }

        for l in (0..n_layers).rev() {
            let layer = &views[l];
            let x = &trace.activations[l];
            if let Some(grad) = param_grad.as_deref_mut() {
                let (w_grad, b_grad) = grad
                    [offsets[l]..offsets[l] + layer.n_in * layer.n_out + layer.n_out]
                    .split_at_mut(layer.n_in * layer.n_out);
                for b in 0..batch {
                    let d = delta.row(b);
                    axpy(1.0, d, b_grad);
                    for (i, &xi) in x.row(b).iter().enumerate() {
                        if xi != 0.0 {
                            axpy(xi, d, &mut w_grad[i * layer.n_out..(i + 1) * layer.n_out]);
                        }
                    }
                }
            }
            if l == 0 && !want_input_grad {
                return Ok(None);
            }
            let mut dx = Matrix::zeros(batch, layer.n_in);
            for b in 0..batch {
                let d = delta.row(b);
                let x_row = x.row(b);
                let dx_row = dx.row_mut(b);
                for i in 0..layer.n_in {
                    // Rectifier derivative for hidden inputs; raw input for layer 0.
                    if l > 0 && x_row[i] <= 0.0 {
                        continue;
                    }
                    dx_row[i] = dot(&layer.weights[i * layer.n_out..(i + 1) * layer.n_out], d);
                }
            }
            delta = dx;
        }
        Ok(Some(delta))
    }

    /// Single-sample backward pass. Recomputes the forward pass, returns the
    /// parameter gradient and dLoss/dInput.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(ParameterVector, Vec<f64>)> {
        let x = Matrix::new(1, input.len(), input.to_vec())?;
        check_dim("Mlp::backward output_grad", self.output_dim(), output_grad.len())?;
        let g = Matrix::new(1, output_grad.len(), output_grad.to_vec())?;
        let trace = self.forward_trace(&x)?;
        let mut grad = vec![0.0; self.params.len()];
        let input_grad = self
            .backward_trace(&trace, &g, Some(&mut grad), true)?
            .expect("input gradient requested");
        Ok((ParameterVector(grad), input_grad.into_data()))
    }
}
