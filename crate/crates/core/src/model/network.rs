use crate::error::{Error, Result};
use crate::layers::{
    conv_backward_from_output, conv_forward, dense_backward_from_output, dense_forward,
    intermap_pool_forward, intramap_pool_forward, pool_backward, relu_backward, relu_forward,
    softmax, softmax_xent, Activation, ArgIndexMap, ConvLayer, DenseLayer, IntermapPoolSpec,
    IntramapPoolSpec,
};
use crate::optimizer::Parameters;
use crate::rng::GaussianSource;
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

use super::{conv_extent, infer_shapes, ConvAxis, LayerKind, NetworkConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<S> {
    Conv { conv: ConvLayer<S>, axis: ConvAxis },
    Relu,
    IntramapPool(IntramapPoolSpec),
    IntermapPool(IntermapPoolSpec),
    Dense(DenseLayer<S>),
    /// Dense layer with identity activation producing logits; the network
    /// output is their softmax.
    SoftmaxOut(DenseLayer<S>),
}

impl<S: Scalar> Layer<S> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv {
                axis: ConvAxis::Time,
                ..
            } => "conv_time",
            Layer::Conv {
                axis: ConvAxis::Freq,
                ..
            } => "conv_freq",
            Layer::Relu => "relu",
            Layer::IntramapPool(_) => "intramap",
            Layer::IntermapPool(_) => "intermap",
            Layer::Dense(_) => "dense",
            Layer::SoftmaxOut(_) => "softmax",
        }
    }

    fn params(&self) -> Vec<&Tensor<S>> {
        match self {
            Layer::Conv { conv, .. } => vec![conv.weights(), conv.bias()],
            Layer::Dense(d) | Layer::SoftmaxOut(d) => vec![d.weights(), d.bias()],
            _ => vec![],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        match self {
            Layer::Conv { conv, .. } => {
                let (w, b) = conv.parts_mut();
                vec![w, b]
            }
            Layer::Dense(d) | Layer::SoftmaxOut(d) => {
                let (w, b) = d.parts_mut();
                vec![w, b]
            }
            _ => vec![],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Keep activations and pooling routes for a following `backward`.
    Train,
    Eval,
}

/// Activations of one forward pass: the input followed by every layer's
/// output (logits for a softmax layer), plus pooling routes.
#[derive(Debug, Clone)]
pub struct Trace<S> {
    outputs: Vec<Tensor<S>>,
    argmaps: Vec<Option<ArgIndexMap>>,
    softmax_out: bool,
}

impl<S: Scalar> Trace<S> {
    pub fn input(&self) -> &Tensor<S> {
        &self.outputs[0]
    }

    /// Output of layer `index` (0-based).
    pub fn layer_output(&self, index: usize) -> &Tensor<S> {
        &self.outputs[index + 1]
    }

    pub fn logits(&self) -> &[S] {
        self.outputs.last().unwrap().data()
    }

    pub fn scores(&self) -> Vec<S> {
        if self.softmax_out {
            softmax(self.logits())
        } else {
            self.logits().to_vec()
        }
    }

    /// Branch pattern of every piecewise-linear unit: ReLU on/off states and
    /// pooling winners. Equal signatures on both sides of a perturbation mean
    /// no kink was crossed.
    pub fn signature(&self, net: &Network<S>) -> Vec<usize> {
        let mut sig = Vec::new();
        for (i, layer) in net.layers.iter().enumerate() {
            let relu = match layer {
                Layer::Relu => true,
                Layer::Conv { conv, .. } => conv.activation() == Activation::Relu,
                Layer::Dense(d) => d.activation() == Activation::Relu,
                _ => false,
            };
            if relu {
                sig.extend(self.outputs[i + 1].data().iter().map(|&v| usize::from(v > S::zero())));
            }
            if let Some(arg) = &self.argmaps[i] {
                sig.extend_from_slice(arg.sources());
            }
        }
        sig
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S> {
    pub loss: S,
    /// Same order and shapes as [`Parameters::params`].
    pub params: Vec<Tensor<S>>,
    pub input: Tensor<S>,
}

#[derive(Debug, Clone)]
pub struct Network<S> {
    config: NetworkConfig,
    layers: Vec<Layer<S>>,
    shapes: Vec<Shape>,
    cache: Option<Trace<S>>,
    validate: bool,
}

impl<S: Scalar> Network<S> {
    /// Instantiates the layers, drawing parameters in layer order from one
    /// Gaussian stream seeded by `config.seed`: each layer's weights, then
    /// its biases.
    pub fn build(config: &NetworkConfig) -> Result<Self> {
        let shapes = infer_shapes(config)?;
        let mut src = GaussianSource::new(config.seed, 0.0, 1.0);
        let mut layers = Vec::with_capacity(config.layers.len());
        for (i, spec) in config.layers.iter().enumerate() {
            let (input, output) = (shapes[i], shapes[i + 1]);
            let w_std = spec.init_stddev.unwrap_or(config.weight_stddev);
            let layer = match &spec.kind {
                LayerKind::ConvTime {
                    maps, activation, ..
                }
                | LayerKind::ConvFreq {
                    maps, activation, ..
                } => {
                    let (h, w) = conv_extent(&spec.kind, input).map_err(Error::Config)?;
                    let axis = match spec.kind {
                        LayerKind::ConvTime { .. } => ConvAxis::Time,
                        _ => ConvAxis::Freq,
                    };
                    let weights = draw(Shape::new(h, w, input.maps() * maps)?, &mut src, w_std);
                    let bias = draw(Shape::vector(*maps)?, &mut src, config.bias_stddev);
                    Layer::Conv {
                        conv: ConvLayer::new(weights, bias, input.maps(), *activation)?,
                        axis,
                    }
                }
                LayerKind::Relu => Layer::Relu,
                LayerKind::IntramapPool(p) => Layer::IntramapPool(*p),
                LayerKind::IntermapPool(p) => Layer::IntermapPool(*p),
                LayerKind::Dense { activation, .. } => Layer::Dense(dense(input, output, *activation, &mut src, w_std, config.bias_stddev)?),
                LayerKind::SoftmaxOut { .. } => Layer::SoftmaxOut(dense(
                    input,
                    output,
                    Activation::Identity,
                    &mut src,
                    w_std,
                    config.bias_stddev,
                )?),
            };
            layers.push(layer);
        }
        Ok(Network {
            config: config.clone(),
            layers,
            shapes,
            cache: None,
            validate: cfg!(debug_assertions),
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        self.cache = None;
        &mut self.layers
    }

    /// Input shape followed by every layer's output shape.
    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn input_shape(&self) -> Shape {
        self.shapes[0]
    }

    pub fn classes(&self) -> usize {
        self.shapes.last().unwrap().len()
    }

    /// Checks every layer output for NaN/Inf (on by default in debug builds).
    pub fn set_validation(&mut self, on: bool) {
        self.validate = on;
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if !layer.params().is_empty() {
                names.push(format!("layer{i}.{}.weights", layer.kind_name()));
                names.push(format!("layer{i}.{}.bias", layer.kind_name()));
            }
        }
        names
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn forward_trace(&self, input: &Tensor<S>) -> Result<Trace<S>> {
        if input.shape() != self.input_shape() {
            return Err(Error::mismatch("network input", self.input_shape(), input.shape()));
        }
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        let mut argmaps = Vec::with_capacity(self.layers.len());
        outputs.push(input.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let x = &outputs[i];
            let (y, arg) = match layer {
                Layer::Conv { conv, .. } => (conv_forward(x, conv)?, None),
                Layer::Relu => (relu_forward(x), None),
                Layer::IntramapPool(spec) => {
                    let (y, a) = intramap_pool_forward(x, *spec)?;
                    (y, Some(a))
                }
                Layer::IntermapPool(spec) => {
                    let (y, a) = intermap_pool_forward(x, *spec)?;
                    (y, Some(a))
                }
                Layer::Dense(d) | Layer::SoftmaxOut(d) => (dense_forward(x, d)?, None),
            };
            if self.validate && !y.is_finite() {
                return Err(Error::NonFinite(format!("layer {i} ({})", layer.kind_name())));
            }
            outputs.push(y);
            argmaps.push(arg);
        }
        Ok(Trace {
            outputs,
            argmaps,
            softmax_out: matches!(self.layers.last(), Some(Layer::SoftmaxOut(_))),
        })
    }

    /// Class scores (softmax probabilities when the last layer is a softmax
    /// output). Train mode keeps the activations for [`Network::backward`].
    pub fn forward(&mut self, input: &Tensor<S>, mode: Mode) -> Result<Vec<S>> {
        let trace = self.forward_trace(input)?;
        let scores = trace.scores();
        self.cache = match mode {
            Mode::Train => Some(trace),
            Mode::Eval => None,
        };
        Ok(scores)
    }

    pub fn predict(&self, input: &Tensor<S>) -> Result<usize> {
        let trace = self.forward_trace(input)?;
        Ok(argmax(trace.logits()))
    }

    /// Gradients of the softmax cross-entropy for `label` at the last
    /// training-mode forward pass.
    pub fn backward(&mut self, label: usize) -> Result<Gradients<S>> {
        let trace = self.cache.take().ok_or(Error::NoForwardCache)?;
        let grads = self.backward_trace(&trace, label);
        self.cache = Some(trace);
        grads
    }

    pub fn backward_trace(&self, trace: &Trace<S>, label: usize) -> Result<Gradients<S>> {
        if trace.outputs.len() != self.layers.len() + 1 {
            return Err(Error::mismatch("trace depth", self.layers.len() + 1, trace.outputs.len()));
        }
        let (loss, logit_grad) = softmax_xent(trace.logits(), label)?;
        let last = trace.outputs.last().unwrap().shape();
        let mut upstream = Tensor::from_vec(last, logit_grad)?;
        let mut param_grads: Vec<Vec<Tensor<S>>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (x, y) = (&trace.outputs[i], &trace.outputs[i + 1]);
            upstream = match layer {
                Layer::Conv { conv, .. } => {
                    let g = conv_backward_from_output(x, y, conv, &upstream)?;
                    param_grads.push(g.params);
                    g.input
                }
                Layer::Dense(d) | Layer::SoftmaxOut(d) => {
                    let g = dense_backward_from_output(x, y, d, &upstream)?;
                    param_grads.push(g.params);
                    g.input
                }
                Layer::Relu => relu_backward(y, &upstream)?,
                Layer::IntramapPool(_) | Layer::IntermapPool(_) => {
                    let arg = trace.argmaps[i].as_ref().ok_or_else(|| {
                        Error::mismatch("trace pooling route", "recorded", "missing")
                    })?;
                    pool_backward(arg, &upstream)?
                }
            };
        }
        Ok(Gradients {
            loss,
            params: param_grads.into_iter().rev().flatten().collect(),
            input: upstream,
        })
    }

    /// Cross-entropy loss without gradients.
    pub fn loss(&self, input: &Tensor<S>, label: usize) -> Result<S> {
        let trace = self.forward_trace(input)?;
        Ok(softmax_xent(trace.logits(), label)?.0)
    }

    /// Replaces every parameter tensor; shapes must match.
    pub fn set_params(&mut self, values: &[Tensor<S>]) -> Result<()> {
        let mut params = self.params_mut();
        if params.len() != values.len() {
            return Err(Error::mismatch("parameter count", params.len(), values.len()));
        }
        for (p, v) in params.iter().zip(values) {
            if p.shape() != v.shape() {
                return Err(Error::mismatch("parameter shape", p.shape(), v.shape()));
            }
        }
        for (p, v) in params.iter_mut().zip(values) {
            p.clone_from(v);
        }
        Ok(())
    }
}

impl<S: Scalar> Parameters<S> for Network<S> {
    fn params(&self) -> Vec<&Tensor<S>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        self.cache = None;
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}

fn draw<S: Scalar>(shape: Shape, src: &mut GaussianSource, stddev: f64) -> Tensor<S> {
    src.reparameterize(0.0, stddev);
    Tensor::gaussian_fill(shape, src)
}

fn dense<S: Scalar>(
    input: Shape,
    output: Shape,
    activation: Activation,
    src: &mut GaussianSource,
    w_std: f64,
    b_std: f64,
) -> Result<DenseLayer<S>> {
    let weights = draw(Shape::new(input.len(), output.len(), 1)?, src, w_std);
    let bias = draw(Shape::vector(output.len())?, src, b_std);
    DenseLayer::new(weights, bias, activation)
}

/// Index of the largest value; first one wins ties.
pub(crate) fn argmax<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
