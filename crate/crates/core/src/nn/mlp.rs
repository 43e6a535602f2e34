use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Layer widths. `hidden_layers = 1` is the input-hidden-output network;
/// `2` stacks a second hidden layer of the same width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: usize,
    pub hidden_layers: usize,
    pub out: usize,
}

impl Architecture {
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim];
        dims.extend(std::iter::repeat(self.hidden).take(self.hidden_layers));
        dims.push(self.out);
        dims
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.hidden_layers == 0 || self.out == 0 {
            return Err(Error::ShapeMismatch(format!(
                "all layer dimensions must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in))`, drawn layer by
    /// layer in row-major order; biases zero.
    pub fn init(&self, rng: &mut RngStream) -> Result<MlpModel> {
        self.validate()?;
        let layers = self
            .dims()
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let scale = 1.0 / (fan_in as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.symmetric(scale))
                    .collect();
                Dense {
                    weights: Matrix::from_vec(fan_out, fan_in, data).expect("sized above"),
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(MlpModel { layers })
    }
}

/// `y = W x + b` with `W` stored `[out x in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Matrix::zeros(fan_out, fan_in),
            bias: vec![0.0; fan_out],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.rows()
    }

    /// `Z = X W^T + b`. Zero inputs are skipped, which matters for binary
    /// inputs and post-ReLU activations.
    fn forward(&self, x: &Matrix) -> Matrix {
        let wt = self.weights.transpose();
        let mut z = Matrix::zeros(x.rows(), self.fan_out());
        for r in 0..x.rows() {
            let zr = z.row_mut(r);
            zr.copy_from_slice(&self.bias);
            for (i, &xi) in x.row(r).iter().enumerate() {
                if xi != 0.0 {
                    for (zo, &w) in zr.iter_mut().zip(wt.row(i)) {
                        *zo += xi * w;
                    }
                }
            }
        }
        z
    }
}

/// Feed-forward ReLU network; the last layer emits raw logits.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Dense>,
}

/// Parameter gradients share the model's layout.
pub type Gradients = MlpModel;

impl MlpModel {
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.fan_in(), l.fan_out()))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("at least one layer").fan_out()
    }

    /// `[input, hidden.., output]` widths.
    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Dense::fan_out));
        dims
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Every parameter tensor with a stable name, weights before bias, layer by layer.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    (format!("w{}", i + 1), l.weights.as_slice()),
                    (format!("b{}", i + 1), l.bias.as_slice()),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    pub fn forward_pass(&self, inputs: &Matrix) -> Result<ForwardPass> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input width {} does not match model input_dim {}",
                inputs.cols(),
                self.input_dim()
            )));
        }
        let (head, body) = self.layers.split_last().expect("at least one layer");
        let mut hidden: Vec<Matrix> = Vec::with_capacity(body.len());
        for layer in body {
            let h = layer
                .forward(hidden.last().unwrap_or(inputs))
                .map(|v| v.max(0.0));
            hidden.push(h);
        }
        let logits = head.forward(hidden.last().unwrap_or(inputs));
        Ok(ForwardPass { hidden, logits })
    }

    /// Gradients of the loss whose logit gradient is `dlogits`, reusing the
    /// activations recorded in `pass`.
    pub fn backward_pass(
        &self,
        inputs: &Matrix,
        pass: &ForwardPass,
        dlogits: &Matrix,
    ) -> Result<Gradients> {
        if dlogits.shape() != pass.logits.shape() {
            return Err(Error::ShapeMismatch(format!(
                "dlogits {:?} does not match logits {:?}",
                dlogits.shape(),
                pass.logits.shape()
            )));
        }
        let mut grads = self.zeros_like();
        let mut delta = dlogits.clone();
        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let layer_in = if idx == 0 {
                inputs
            } else {
                &pass.hidden[idx - 1]
            };
            let g = &mut grads.layers[idx];

            let mut dwt = Matrix::zeros(layer.fan_in(), layer.fan_out());
            for r in 0..delta.rows() {
                let dr = delta.row(r);
                for (gb, &d) in g.bias.iter_mut().zip(dr) {
                    *gb += d;
                }
                for (i, &a) in layer_in.row(r).iter().enumerate() {
                    if a != 0.0 {
                        for (gw, &d) in dwt.row_mut(i).iter_mut().zip(dr) {
                            *gw += a * d;
                        }
                    }
                }
            }
            g.weights = dwt.transpose();

            if idx > 0 {
                // Propagate through W, then gate by the ReLU (subgradient 0 at 0).
                let mut next = Matrix::zeros(delta.rows(), layer.fan_in());
                for r in 0..delta.rows() {
                    let nr = next.row_mut(r);
                    for (o, &d) in delta.row(r).iter().enumerate() {
                        if d != 0.0 {
                            for (n, &w) in nr.iter_mut().zip(layer.weights.row(o)) {
                                *n += d * w;
                            }
                        }
                    }
                    for (n, &h) in nr.iter_mut().zip(layer_in.row(r)) {
                        if h <= 0.0 {
                            *n = 0.0;
                        }
                    }
                }
                delta = next;
            }
        }
        Ok(grads)
    }
}

/// Activations kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// Post-ReLU activations of each hidden layer.
    pub hidden: Vec<Matrix>,
    pub logits: Matrix,
}

/// Rows of encoded inputs with their labels and task ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub inputs: Matrix,
    pub labels: Vec<u8>,
    pub task_ids: Vec<usize>,
}

impl Batch {
    pub fn new(inputs: Matrix, labels: Vec<u8>, task_ids: Vec<usize>) -> Result<Self> {
        if labels.len() != inputs.rows() || task_ids.len() != inputs.rows() {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} input rows, {} labels and {} task ids",
                inputs.rows(),
                labels.len(),
                task_ids.len()
            )));
        }
        Ok(Self {
            inputs,
            labels,
            task_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One hidden layer of width `hidden`.
pub fn init_model(
    input_dim: usize,
    hidden: usize,
    out: usize,
    rng: &mut RngStream,
) -> Result<MlpModel> {
    Architecture {
        input_dim,
        hidden,
        hidden_layers: 1,
        out,
    }
    .init(rng)
}

pub fn forward(model: &MlpModel, inputs: &Matrix) -> Result<Matrix> {
    Ok(model.forward_pass(inputs)?.logits)
}

pub fn backward(model: &MlpModel, inputs: &Matrix, dlogits: &Matrix) -> Result<Gradients> {
    let pass = model.forward_pass(inputs)?;
    model.backward_pass(inputs, &pass, dlogits)
}
