//! Network description, shape inference, construction and orchestration.

mod network;
mod presets;
mod snapshot;
mod text;

pub use network::{Gradients, Layer, Mode, Network, Trace};
pub use presets::{preset, preset_reduced, PRESET_NAMES};
pub use snapshot::{load_network, save_network};
pub use text::{format_config, parse_config};

use crate::error::{Error, Result};
use crate::layers::{Activation, IntermapPoolSpec, IntramapPoolSpec};
use crate::tensor::Shape;

/// Axis a convolution slides along. Time-axis filters span every frequency
/// bin; frequency-axis filters span every time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvAxis {
    Time,
    Freq,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerKind {
    /// `height` defaults to (and must equal) the incoming frequency extent.
    ConvTime {
        height: Option<usize>,
        width: usize,
        maps: usize,
        activation: Activation,
    },
    /// `width` defaults to (and must equal) the incoming time extent.
    ConvFreq {
        height: usize,
        width: Option<usize>,
        maps: usize,
        activation: Activation,
    },
    Relu,
    IntramapPool(IntramapPoolSpec),
    IntermapPool(IntermapPoolSpec),
    Dense {
        units: usize,
        activation: Activation,
    },
    /// Affine map to class logits followed by softmax.
    SoftmaxOut {
        classes: usize,
    },
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::ConvTime { .. } => "conv_time",
            LayerKind::ConvFreq { .. } => "conv_freq",
            LayerKind::Relu => "relu",
            LayerKind::IntramapPool(_) => "intramap",
            LayerKind::IntermapPool(_) => "intermap",
            LayerKind::Dense { .. } => "dense",
            LayerKind::SoftmaxOut { .. } => "softmax",
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(
            self,
            LayerKind::ConvTime { .. }
                | LayerKind::ConvFreq { .. }
                | LayerKind::Dense { .. }
                | LayerKind::SoftmaxOut { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// Replaces the network-wide weight stddev for this layer.
    pub init_stddev: Option<f64>,
}

impl LayerSpec {
    pub fn new(kind: LayerKind) -> Self {
        LayerSpec {
            kind,
            init_stddev: None,
        }
    }

    pub fn with_init(mut self, stddev: f64) -> Self {
        self.init_stddev = Some(stddev);
        self
    }

    pub fn conv_time(width: usize, maps: usize) -> Self {
        Self::new(LayerKind::ConvTime {
            height: None,
            width,
            maps,
            activation: Activation::Relu,
        })
    }

    pub fn conv_freq(height: usize, maps: usize) -> Self {
        Self::new(LayerKind::ConvFreq {
            height,
            width: None,
            maps,
            activation: Activation::Relu,
        })
    }

    pub fn intramap(p: usize, q: usize) -> Result<Self> {
        Ok(Self::new(LayerKind::IntramapPool(IntramapPoolSpec::new(p, q)?)))
    }

    pub fn intermap(r: usize, stride: usize) -> Result<Self> {
        Ok(Self::new(LayerKind::IntermapPool(IntermapPoolSpec::new(r, stride)?)))
    }

    pub fn dense(units: usize) -> Self {
        Self::new(LayerKind::Dense {
            units,
            activation: Activation::Relu,
        })
    }

    pub fn softmax(classes: usize) -> Self {
        Self::new(LayerKind::SoftmaxOut { classes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
    pub weight_stddev: f64,
    pub bias_stddev: f64,
}

impl NetworkConfig {
    pub const DEFAULT_WEIGHT_STDDEV: f64 = 0.01;
    pub const DEFAULT_BIAS_STDDEV: f64 = 0.5;

    /// Default 40 × 21 × 1 input (40 log-mel bands, 21-frame context).
    pub fn new(layers: Vec<LayerSpec>) -> Self {
        NetworkConfig {
            input: Shape::new(40, 21, 1).unwrap(),
            layers,
            seed: 0,
            weight_stddev: Self::DEFAULT_WEIGHT_STDDEV,
            bias_stddev: Self::DEFAULT_BIAS_STDDEV,
        }
    }

    /// Number of classes the network scores, i.e. the size of its output.
    pub fn classes(&self) -> Result<usize> {
        Ok(infer_shapes(self)?.last().unwrap().len())
    }

    /// Number of layers carrying weights.
    pub fn depth(&self) -> usize {
        self.layers.iter().filter(|l| l.kind.has_params()).count()
    }

    /// Copy whose weight layers draw from `N(0, gain² / fan_in)` instead of
    /// the fixed default, with biases drawn from `N(0, bias_stddev²)`.
    pub fn fan_in_scaled(&self, gain: f64, bias_stddev: f64) -> Result<NetworkConfig> {
        let shapes = infer_shapes(self)?;
        let mut out = self.clone();
        out.bias_stddev = bias_stddev;
        for (i, layer) in out.layers.iter_mut().enumerate() {
            let fan_in = match layer.kind {
                LayerKind::ConvTime { .. } | LayerKind::ConvFreq { .. } => {
                    let (h, w) = conv_extent(&layer.kind, shapes[i]).map_err(Error::Config)?;
                    h * w * shapes[i].maps()
                }
                LayerKind::Dense { .. } | LayerKind::SoftmaxOut { .. } => shapes[i].len(),
                _ => continue,
            };
            layer.init_stddev = Some(gain / (fan_in as f64).sqrt());
        }
        Ok(out)
    }

    pub fn param_count(&self) -> Result<usize> {
        let shapes = infer_shapes(self)?;
        Ok(self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| param_count(&l.kind, shapes[i], shapes[i + 1]))
            .sum())
    }
}

fn param_count(kind: &LayerKind, input: Shape, output: Shape) -> usize {
    match kind {
        LayerKind::ConvTime { .. } | LayerKind::ConvFreq { .. } => {
            let (h, w) = conv_extent(kind, input).expect("validated by infer_shapes");
            (h * w * input.maps() + 1) * output.maps()
        }
        LayerKind::Dense { .. } | LayerKind::SoftmaxOut { .. } => (input.len() + 1) * output.len(),
        _ => 0,
    }
}

/// Filter (height, width) a conv layer resolves to on `input`.
pub(crate) fn conv_extent(kind: &LayerKind, input: Shape) -> std::result::Result<(usize, usize), String> {
    match *kind {
        LayerKind::ConvTime { height, width, .. } => {
            let full = input.freq_bins();
            match height {
                Some(h) if h != full => Err(format!(
                    "time-axis filter height {h} must span all {full} frequency bins"
                )),
                _ => Ok((full, width)),
            }
        }
        LayerKind::ConvFreq { height, width, .. } => {
            let full = input.time_steps();
            match width {
                Some(w) if w != full => Err(format!(
                    "frequency-axis filter width {w} must span all {full} time steps"
                )),
                _ => Ok((height, full)),
            }
        }
        _ => Err("not a convolution".into()),
    }
}

fn layer_output(kind: &LayerKind, input: Shape, is_last: bool) -> std::result::Result<Shape, String> {
    let shape_err = |e: Error| e.to_string();
    match kind {
        LayerKind::ConvTime { maps, .. } | LayerKind::ConvFreq { maps, .. } => {
            let (h, w) = conv_extent(kind, input)?;
            if h == 0 || w == 0 || *maps == 0 {
                return Err("filter extent and map count must be positive".into());
            }
            if input.freq_bins() < h {
                return Err(format!(
                    "frequency underflow: {} bins < filter height {h}",
                    input.freq_bins()
                ));
            }
            if input.time_steps() < w {
                return Err(format!(
                    "time underflow: {} steps < filter width {w}",
                    input.time_steps()
                ));
            }
            Shape::new(input.freq_bins() - h + 1, input.time_steps() - w + 1, *maps).map_err(shape_err)
        }
        LayerKind::Relu => Ok(input),
        LayerKind::IntramapPool(spec) => {
            if input.time_steps() < spec.q {
                return Err(format!(
                    "time underflow: {} steps < pool width {}",
                    input.time_steps(),
                    spec.q
                ));
            }
            if input.freq_bins() < spec.p {
                return Err(format!(
                    "frequency underflow: {} bins < pool height {}",
                    input.freq_bins(),
                    spec.p
                ));
            }
            spec.output_shape(input).map_err(shape_err)
        }
        LayerKind::IntermapPool(spec) => spec.output_shape(input).map_err(|_| {
            if spec.is_disjoint() {
                format!("{} maps are not divisible into groups of {}", input.maps(), spec.r)
            } else {
                format!("{} maps are fewer than the group size {}", input.maps(), spec.r)
            }
        }),
        LayerKind::Dense { units, .. } => {
            if *units == 0 {
                return Err("dense layer needs at least one unit".into());
            }
            Shape::vector(*units).map_err(shape_err)
        }
        LayerKind::SoftmaxOut { classes } => {
            if !is_last {
                return Err("softmax output must be the last layer".into());
            }
            if *classes == 0 {
                return Err("softmax needs at least one class".into());
            }
            Shape::vector(*classes).map_err(shape_err)
        }
    }
}

/// Input shape followed by every layer's output shape.
pub fn infer_shapes(config: &NetworkConfig) -> Result<Vec<Shape>> {
    if config.layers.is_empty() {
        return Err(Error::Config("network has no layers".into()));
    }
    let mut shapes = vec![config.input];
    let n = config.layers.len();
    for (index, spec) in config.layers.iter().enumerate() {
        if let Some(s) = spec.init_stddev {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Layer {
                    index,
                    kind: spec.kind.name().into(),
                    reason: format!("init stddev {s} must be nonnegative"),
                });
            }
        }
        let input = *shapes.last().unwrap();
        let out = layer_output(&spec.kind, input, index + 1 == n).map_err(|reason| Error::Layer {
            index,
            kind: spec.kind.name().into(),
            reason,
        })?;
        shapes.push(out);
    }
    Ok(shapes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(f: usize, t: usize, m: usize) -> Shape {
        Shape::new(f, t, m).unwrap()
    }

    fn config(input: Shape, layers: Vec<LayerSpec>) -> NetworkConfig {
        NetworkConfig {
            input,
            ..NetworkConfig::new(layers)
        }
    }

    #[test]
    fn fan_in_scaling() {
        let c = config(
            shape(4, 6, 1),
            vec![LayerSpec::conv_time(2, 3), LayerSpec::new(LayerKind::Relu), LayerSpec::dense(5), LayerSpec::softmax(2)],
        );
        let s = c.fan_in_scaled(2.0, 0.0).unwrap();
        assert_eq!(s.layers[0].init_stddev, Some(2.0 / 8f64.sqrt()));
        assert_eq!(s.layers[1].init_stddev, None);
        assert_eq!(s.layers[2].init_stddev, Some(2.0 / 15f64.sqrt()));
        assert_eq!(s.layers[3].init_stddev, Some(2.0 / 5f64.sqrt()));
        assert_eq!(s.bias_stddev, 0.0);
    }

    #[test]
    fn wide_first_conv() {
        let c = config(shape(40, 21, 1), vec![LayerSpec::conv_time(5, 8)]);
        assert_eq!(infer_shapes(&c).unwrap()[1], shape(1, 17, 8));
    }

    #[test]
    fn intermap_keeps_spatial_dims() {
        let c = config(shape(1, 17, 8), vec![LayerSpec::intermap(4, 4).unwrap()]);
        assert_eq!(infer_shapes(&c).unwrap()[1], shape(1, 17, 2));
    }

    #[test]
    fn time_underflow_names_layer() {
        let c = config(
            shape(1, 2, 8),
            vec![LayerSpec::new(LayerKind::ConvTime {
                height: Some(1),
                width: 3,
                maps: 4,
                activation: Activation::Relu,
            })],
        );
        match infer_shapes(&c) {
            Err(Error::Layer { index: 0, reason, .. }) => assert!(reason.contains("time underflow"), "{reason}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn indivisible_group_and_misplaced_softmax() {
        let c = config(shape(1, 4, 6), vec![LayerSpec::intermap(4, 4).unwrap()]);
        assert!(matches!(infer_shapes(&c), Err(Error::Layer { index: 0, .. })));
        let c = config(shape(1, 4, 6), vec![LayerSpec::softmax(3), LayerSpec::dense(2)]);
        assert!(matches!(infer_shapes(&c), Err(Error::Layer { index: 0, .. })));
    }

    #[test]
    fn time_conv_height_must_span_frequency() {
        let c = config(
            shape(40, 21, 1),
            vec![LayerSpec::new(LayerKind::ConvTime {
                height: Some(20),
                width: 5,
                maps: 4,
                activation: Activation::Relu,
            })],
        );
        assert!(infer_shapes(&c).is_err());
    }

    #[test]
    fn param_count_matches_hand_count() {
        let c = config(
            shape(40, 21, 1),
            vec![LayerSpec::conv_time(5, 8), LayerSpec::dense(3), LayerSpec::softmax(2)],
        );
        // conv 40·5·8 + 8, dense 17·8·3 + 3, softmax 3·2 + 2
        assert_eq!(c.param_count().unwrap(), 1608 + 411 + 8);
        assert_eq!(c.depth(), 3);
        assert_eq!(c.classes().unwrap(), 2);
    }
}
