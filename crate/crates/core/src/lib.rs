//! Time-axis convolutional networks with intermap pooling for acoustic
//! frame classification: tensors, layers, SGD, a log-mel front-end, a
//! synthetic shifted-pattern corpus and diagnostics.
//!
//! The numerical core is generic over [`Scalar`]; everything that trains or
//! touches disk uses `f64` through the aliases below.

pub mod analysis;
pub mod error;
pub mod features;
pub mod gradcheck;
pub mod io;
pub mod layers;
pub mod model;
pub mod optimizer;
pub mod rng;
pub mod scalar;
pub mod synthdata;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Shape;

pub type Tensor = tensor::Tensor<f64>;
pub type Network = model::Network<f64>;
pub type ConvLayer = layers::ConvLayer<f64>;
pub type DenseLayer = layers::DenseLayer<f64>;
pub type SgdState = optimizer::SgdState<f64>;
pub type EpochGate = optimizer::EpochGate<f64>;

pub type Tensor32 = tensor::Tensor<f32>;
pub type Network32 = model::Network<f32>;
