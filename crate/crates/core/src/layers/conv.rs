//! Valid 2-D cross-correlation with one shared bias per output map.
//!
//! Output element `(i, j, k)` is `f(Σ_{m,n,g} W_k[m, n, g] · X[i+m, j+n, g] + b_k)`.
//! The kernel is not flipped. With `height` equal to the input frequency
//! extent the filter slides along time only, which is how the time-axis
//! architectures use it; a `width` equal to the time extent gives the
//! frequency-axis arrangement.

use crate::error::{Error, Result};
use crate::rng::GaussianSource;
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

use super::{Activation, LayerGrad};

/// Filter bank packed as `height × width × (out_maps · in_maps)`; filter `k`
/// occupies maps `k·in_maps .. (k+1)·in_maps`. Biases are `out_maps × 1 × 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<S> {
    weights: Tensor<S>,
    bias: Tensor<S>,
    in_maps: usize,
    out_maps: usize,
    activation: Activation,
}

impl<S: Scalar> ConvLayer<S> {
    pub fn new(
        weights: Tensor<S>,
        bias: Tensor<S>,
        in_maps: usize,
        activation: Activation,
    ) -> Result<Self> {
        let ws = weights.shape();
        if in_maps == 0 || ws.maps() % in_maps != 0 {
            return Err(Error::Config(format!(
                "filter bank {ws} is not a whole number of {in_maps}-map filters"
            )));
        }
        let out_maps = ws.maps() / in_maps;
        if bias.shape() != Shape::vector(out_maps)? {
            return Err(Error::mismatch("ConvLayer bias", out_maps, bias.shape()));
        }
        Ok(ConvLayer {
            weights,
            bias,
            in_maps,
            out_maps,
            activation,
        })
    }

    pub fn zeros(
        height: usize,
        width: usize,
        in_maps: usize,
        out_maps: usize,
        activation: Activation,
    ) -> Result<Self> {
        let weights = Tensor::zeros(Shape::new(height, width, in_maps * out_maps)?);
        let bias = Tensor::zeros(Shape::vector(out_maps)?);
        Self::new(weights, bias, in_maps, activation)
    }

    /// Weights drawn first, then biases, both from their own source.
    pub fn random(
        height: usize,
        width: usize,
        in_maps: usize,
        out_maps: usize,
        activation: Activation,
        weight_src: &mut GaussianSource,
        bias_src: &mut GaussianSource,
    ) -> Result<Self> {
        let weights = Tensor::gaussian_fill(Shape::new(height, width, in_maps * out_maps)?, weight_src);
        let bias = Tensor::gaussian_fill(Shape::vector(out_maps)?, bias_src);
        Self::new(weights, bias, in_maps, activation)
    }

    pub fn height(&self) -> usize {
        self.weights.shape().freq_bins()
    }

    pub fn width(&self) -> usize {
        self.weights.shape().time_steps()
    }

    pub fn in_maps(&self) -> usize {
        self.in_maps
    }

    pub fn out_maps(&self) -> usize {
        self.out_maps
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

    /// Filter `k` as its own `height × width × in_maps` tensor.
    pub fn filter(&self, k: usize) -> Tensor<S> {
        let shape = Shape::new(self.height(), self.width(), self.in_maps).unwrap();
        let n = shape.len();
        Tensor::from_vec(shape, self.weights.data()[k * n..(k + 1) * n].to_vec())
            .expect("filter slice has the filter's element count")
    }

    /// Filter column `(n, g)` of filter `k`: `height` contiguous weights.
    #[inline]
    fn filter_column(&self, n: usize, g: usize, k: usize) -> &[S] {
        self.weights.column(n, k * self.in_maps + g)
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        if input.maps() != self.in_maps {
            return Err(Error::mismatch("conv input maps", self.in_maps, input.maps()));
        }
        if input.freq_bins() < self.height() || input.time_steps() < self.width() {
            return Err(Error::mismatch(
                "conv input extent",
                format!("at least {}×{}", self.height(), self.width()),
                input,
            ));
        }
        Shape::new(
            input.freq_bins() - self.height() + 1,
            input.time_steps() - self.width() + 1,
            self.out_maps,
        )
    }
}

#[inline]
fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

pub fn conv_forward<S: Scalar>(input: &Tensor<S>, layer: &ConvLayer<S>) -> Result<Tensor<S>> {
    let out_shape = layer.output_shape(input.shape())?;
    let (oi, oj) = (out_shape.freq_bins(), out_shape.time_steps());
    let (height, width) = (layer.height(), layer.width());
    let mut out = Vec::with_capacity(out_shape.len());
    for k in 0..layer.out_maps {
        let b = layer.bias.data()[k];
        for j in 0..oj {
            for i in 0..oi {
                let mut acc = b;
                for g in 0..layer.in_maps {
                    for n in 0..width {
                        let x = &input.column(j + n, g)[i..i + height];
                        acc += dot(x, layer.filter_column(n, g, k));
                    }
                }
                out.push(layer.activation.apply(acc));
            }
        }
    }
    Tensor::from_vec(out_shape, out)
}

/// Backward pass recomputing the forward output from `input`.
pub fn conv_backward<S: Scalar>(
    input: &Tensor<S>,
    layer: &ConvLayer<S>,
    upstream: &Tensor<S>,
) -> Result<LayerGrad<S>> {
    let output = conv_forward(input, layer)?;
    conv_backward_from_output(input, &output, layer, upstream)
}

/// Backward pass using the cached forward `output` for the activation
/// derivative.
pub fn conv_backward_from_output<S: Scalar>(
    input: &Tensor<S>,
    output: &Tensor<S>,
    layer: &ConvLayer<S>,
    upstream: &Tensor<S>,
) -> Result<LayerGrad<S>> {
    let out_shape = layer.output_shape(input.shape())?;
    if upstream.shape() != out_shape {
        return Err(Error::mismatch("conv_backward upstream", out_shape, upstream.shape()));
    }
    if output.shape() != out_shape {
        return Err(Error::mismatch("conv_backward output", out_shape, output.shape()));
    }
    let (oi, oj) = (out_shape.freq_bins(), out_shape.time_steps());
    let (height, width) = (layer.height(), layer.width());
    let in_shape = input.shape();
    let w_shape = layer.weights.shape();

    let mut d_w = Tensor::zeros(w_shape);
    let mut d_b = Tensor::zeros(layer.bias.shape());
    let mut d_x = Tensor::zeros(in_shape);

    for k in 0..layer.out_maps {
        for j in 0..oj {
            for i in 0..oi {
                let o = out_shape.index(i, j, k);
                let delta = upstream.data()[o] * layer.activation.derivative_from_output(output.data()[o]);
                if delta == S::zero() {
                    continue;
                }
                d_b.data_mut()[k] += delta;
                for g in 0..layer.in_maps {
                    for n in 0..width {
                        let x_start = in_shape.index(i, j + n, g);
                        let w_start = w_shape.index(0, n, k * layer.in_maps + g);
                        axpy(
                            delta,
                            &input.data()[x_start..x_start + height],
                            &mut d_w.data_mut()[w_start..w_start + height],
                        );
                        axpy(
                            delta,
                            layer.filter_column(n, g, k),
                            &mut d_x.data_mut()[x_start..x_start + height],
                        );
                    }
                }
            }
        }
    }
    Ok(LayerGrad {
        params: vec![d_w, d_b],
        input: d_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(f: usize, tt: usize, m: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(Shape::new(f, tt, m).unwrap(), v.to_vec()).unwrap()
    }

    fn layer(h: usize, w: usize, weights: &[f64], bias: f64, act: Activation) -> ConvLayer<f64> {
        ConvLayer::new(t(h, w, 1, weights), t(1, 1, 1, &[bias]), 1, act).unwrap()
    }

    #[test]
    fn identity_filter() {
        let x = t(1, 3, 1, &[1.0, -2.0, 3.0]);
        let l = layer(1, 1, &[1.0], 0.0, Activation::Identity);
        assert_eq!(conv_forward(&x, &l).unwrap().data(), &[1.0, -2.0, 3.0]);
    }

    #[test]
    fn box_filter_with_relu() {
        let x = t(1, 4, 1, &[1.0, -2.0, 3.0, 0.0]);
        let l = layer(1, 3, &[1.0, 1.0, 1.0], 0.0, Activation::Relu);
        assert_eq!(conv_forward(&x, &l).unwrap().data(), &[2.0, 1.0]);
    }

    #[test]
    fn full_extent_filter_collapses_to_one_cell() {
        // frequency-fastest: [[1,2],[3,4]] as rows f, columns t
        let x = Tensor::from_fn(Shape::new(2, 2, 1).unwrap(), |f, tt, _| [[1.0, 2.0], [3.0, 4.0]][f][tt]);
        let l = layer(2, 2, &[1.0; 4], 0.5, Activation::Identity);
        let y = conv_forward(&x, &l).unwrap();
        assert_eq!(y.shape(), Shape::new(1, 1, 1).unwrap());
        assert_eq!(y.data(), &[10.5]);
    }

    #[test]
    fn identity_filter_gradients() {
        let x = t(1, 3, 1, &[1.0, -2.0, 3.0]);
        let l = layer(1, 1, &[1.0], 0.0, Activation::Identity);
        let g = conv_backward(&x, &l, &Tensor::full(Shape::new(1, 3, 1).unwrap(), 1.0)).unwrap();
        assert_eq!(g.params[1].data(), &[3.0]);
        assert_eq!(g.params[0].data(), &[2.0]);
        assert_eq!(g.input.data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let x = t(2, 4, 1, &[0.3, -1.0, 2.0, 0.1, 0.5, 0.5, -0.7, 1.2]);
        let l = layer(2, 3, &[0.1, 0.2, -0.3, 0.4, 0.5, -0.6], 0.1, Activation::Relu);
        let up = Tensor::zeros(Shape::new(1, 2, 1).unwrap());
        let g = conv_backward(&x, &l, &up).unwrap();
        assert!(g.params.iter().all(|p| p.data().iter().all(|&v| v == 0.0)));
        assert!(g.input.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let x = t(1, 2, 1, &[1.0, 2.0]);
        let l = layer(1, 3, &[1.0; 3], 0.0, Activation::Identity);
        assert!(conv_forward(&x, &l).is_err());
        let l = layer(1, 1, &[1.0], 0.0, Activation::Identity);
        assert!(conv_backward(&x, &l, &t(1, 1, 1, &[1.0])).is_err());
        let two_maps = t(1, 2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(conv_forward(&two_maps, &l).is_err());
    }
}
