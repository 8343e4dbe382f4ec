//! Forward and backward passes for every layer type.
//!
//! All operations are pure functions of their arguments. Forward passes that
//! need routing information for the backward pass (the two max-pooling
//! flavours) return it as an [`ArgIndexMap`].

mod conv;
mod dense;
mod loss;
mod pool;

pub use conv::{conv_backward, conv_backward_from_output, conv_forward, ConvLayer};
pub use dense::{dense_backward, dense_backward_from_output, dense_forward, DenseLayer};
pub use loss::{softmax, softmax_xent};
pub use pool::{
    intermap_pool_forward, intramap_pool_forward, pool_backward, IntermapPoolSpec,
    IntramapPoolSpec,
};

#[doc(hidden)]
pub use pool::{intermap_pool_disjoint, intermap_pool_strided};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Relu => {
                if x > S::zero() {
                    x
                } else {
                    S::zero()
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output. ReLU′(0) = 0.
    #[inline]
    pub fn derivative_from_output<S: Scalar>(self, y: S) -> S {
        match self {
            Activation::Relu => {
                if y > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Identity => S::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

/// Gradients produced by one layer's backward pass: one tensor per parameter
/// (same order and shapes as the layer's parameters) plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<S> {
    pub params: Vec<Tensor<S>>,
    pub input: Tensor<S>,
}

/// Winning input position (linear index) for every output element of a max
/// pool. Backward routes upstream values to these positions and sums
/// collisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgIndexMap {
    input_shape: Shape,
    output_shape: Shape,
    source: Vec<usize>,
}

impl ArgIndexMap {
    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn output_shape(&self) -> Shape {
        self.output_shape
    }

    pub fn sources(&self) -> &[usize] {
        &self.source
    }
}

pub fn relu_forward<S: Scalar>(input: &Tensor<S>) -> Tensor<S> {
    input.map(|v| Activation::Relu.apply(v))
}

pub fn relu_backward<S: Scalar>(output: &Tensor<S>, upstream: &Tensor<S>) -> Result<Tensor<S>> {
    if output.shape() != upstream.shape() {
        return Err(Error::mismatch("relu_backward", output.shape(), upstream.shape()));
    }
    let data = output
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&y, &g)| g * Activation::Relu.derivative_from_output(y))
        .collect();
    Tensor::from_vec(output.shape(), data)
}
