use crate::error::{Error, Result};
use crate::rng::GaussianSource;
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

use super::{Activation, LayerGrad};

/// Fully connected layer. Weights are stored `in_units × out_units × 1`, so
/// the weights of one output unit are contiguous. The input tensor is
/// flattened in its linear order.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<S> {
    weights: Tensor<S>,
    bias: Tensor<S>,
    activation: Activation,
}

impl<S: Scalar> DenseLayer<S> {
    pub fn new(weights: Tensor<S>, bias: Tensor<S>, activation: Activation) -> Result<Self> {
        let ws = weights.shape();
        if ws.maps() != 1 || bias.shape() != Shape::vector(ws.time_steps())? {
            return Err(Error::mismatch(
                "DenseLayer parameters",
                "in×out×1 weights with out×1×1 bias",
                format!("{ws} and {}", bias.shape()),
            ));
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(in_units: usize, out_units: usize, activation: Activation) -> Result<Self> {
        Self::new(
            Tensor::zeros(Shape::new(in_units, out_units, 1)?),
            Tensor::zeros(Shape::vector(out_units)?),
            activation,
        )
    }

    pub fn random(
        in_units: usize,
        out_units: usize,
        activation: Activation,
        weight_src: &mut GaussianSource,
        bias_src: &mut GaussianSource,
    ) -> Result<Self> {
        let weights = Tensor::gaussian_fill(Shape::new(in_units, out_units, 1)?, weight_src);
        let bias = Tensor::gaussian_fill(Shape::vector(out_units)?, bias_src);
        Self::new(weights, bias, activation)
    }

    pub fn in_units(&self) -> usize {
        self.weights.shape().freq_bins()
    }

    pub fn out_units(&self) -> usize {
        self.weights.shape().time_steps()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &Tensor<S> {
        &self.weights
    }

    pub fn bias(&self) -> &Tensor<S> {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut Tensor<S> {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut Tensor<S> {
        &mut self.bias
    }

    pub fn parts_mut(&mut self) -> (&mut Tensor<S>, &mut Tensor<S>) {
        (&mut self.weights, &mut self.bias)
    }

    fn row(&self, o: usize) -> &[S] {
        self.weights.column(o, 0)
    }
}

/// Returns an `out_units × 1 × 1` tensor.
pub fn dense_forward<S: Scalar>(input: &Tensor<S>, layer: &DenseLayer<S>) -> Result<Tensor<S>> {
    if input.len() != layer.in_units() {
        return Err(Error::mismatch("dense input length", layer.in_units(), input.len()));
    }
    let x = input.data();
    let out = (0..layer.out_units())
        .map(|o| {
            let mut acc = layer.bias.data()[o];
            for (&w, &xv) in layer.row(o).iter().zip(x) {
                acc += w * xv;
            }
            layer.activation.apply(acc)
        })
        .collect();
    Tensor::from_vec(Shape::vector(layer.out_units())?, out)
}

pub fn dense_backward<S: Scalar>(
    input: &Tensor<S>,
    layer: &DenseLayer<S>,
    upstream: &Tensor<S>,
) -> Result<LayerGrad<S>> {
    let output = dense_forward(input, layer)?;
    dense_backward_from_output(input, &output, layer, upstream)
}

pub fn dense_backward_from_output<S: Scalar>(
    input: &Tensor<S>,
    output: &Tensor<S>,
    layer: &DenseLayer<S>,
    upstream: &Tensor<S>,
) -> Result<LayerGrad<S>> {
    let n_out = layer.out_units();
    if upstream.len() != n_out || output.len() != n_out {
        return Err(Error::mismatch("dense_backward upstream", n_out, upstream.len()));
    }
    if input.len() != layer.in_units() {
        return Err(Error::mismatch("dense input length", layer.in_units(), input.len()));
    }
    let n_in = layer.in_units();
    let mut d_w = Tensor::zeros(layer.weights.shape());
    let mut d_b = Tensor::zeros(layer.bias.shape());
    let mut d_x = Tensor::zeros(input.shape());
    for o in 0..n_out {
        let delta = upstream.data()[o] * layer.activation.derivative_from_output(output.data()[o]);
        d_b.data_mut()[o] = delta;
        if delta == S::zero() {
            continue;
        }
        let dw_row = &mut d_w.data_mut()[o * n_in..(o + 1) * n_in];
        for (d, &xv) in dw_row.iter_mut().zip(input.data()) {
            *d = delta * xv;
        }
        for (d, &w) in d_x.data_mut().iter_mut().zip(layer.row(o)) {
            *d += delta * w;
        }
    }
    Ok(LayerGrad {
        params: vec![d_w, d_b],
        input: d_x,
    })
}
