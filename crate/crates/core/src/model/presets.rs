//! Desk-scale analogues of the time-axis / intermap architectures.
//!
//! | name         | layout                                                                    |
//! |--------------|---------------------------------------------------------------------------|
//! | `imp-toy`    | conv_time(40×5, 64) → intermap(r=4) → [conv_time(1×3, 16)×2 → pool(1×2)]×2 → dense(256) → softmax(5) |
//! | `impo-toy`   | `imp-toy` with overlapping groups (stride 1, 61 pooled maps)              |
//! | `freq-toy`   | axes swapped: conv_freq(5×21, 64) → intermap(r=4) → [conv_freq(3×1, 16)×2 → pool(2×1)]×2 → dense(H) → softmax(5) |
//! | `cnn-toy-6L` | no intermap layer: conv_time(40×5, 16) → same blocks → dense(H) → softmax(5) |
//!
//! The first wide convolution produces the same number of maps after
//! pooling (16) in every variant. Where the structure differs from
//! `imp-toy`, the dense width `H` is solved so the parameter count matches
//! `imp-toy`.

use crate::error::{Error, Result};
use crate::tensor::Shape;

use super::{LayerSpec, NetworkConfig};

pub const PRESET_NAMES: [&str; 4] = ["cnn-toy-6L", "imp-toy", "impo-toy", "freq-toy"];

/// Networks with more weight layers than this get a wider layer-1 init.
const SHALLOW_DEPTH: usize = 7;
const DEEP_LAYER1_STDDEV: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
struct Scale {
    time_input: (usize, usize),
    freq_input: (usize, usize),
    first_width: usize,
    first_maps: usize,
    group: usize,
    block_maps: usize,
    blocks: usize,
    dense_units: usize,
    classes: usize,
}

const FULL: Scale = Scale {
    time_input: (40, 21),
    freq_input: (40, 21),
    first_width: 5,
    first_maps: 64,
    group: 4,
    block_maps: 16,
    blocks: 2,
    dense_units: 256,
    classes: 5,
};

/// Small enough for exhaustive finite-difference checks.
const REDUCED: Scale = Scale {
    time_input: (6, 18),
    freq_input: (18, 6),
    first_width: 3,
    first_maps: 6,
    group: 2,
    block_maps: 3,
    blocks: 2,
    dense_units: 5,
    classes: 3,
};

pub fn preset(name: &str) -> Result<NetworkConfig> {
    build(name, FULL)
}

/// Same structure as [`preset`] at a few units per layer.
pub fn preset_reduced(name: &str) -> Result<NetworkConfig> {
    build(name, REDUCED)
}

fn time_blocks(scale: Scale) -> Result<Vec<LayerSpec>> {
    let mut layers = Vec::new();
    for _ in 0..scale.blocks {
        layers.push(LayerSpec::conv_time(3, scale.block_maps));
        layers.push(LayerSpec::conv_time(3, scale.block_maps));
        layers.push(LayerSpec::intramap(1, 2)?);
    }
    Ok(layers)
}

fn freq_blocks(scale: Scale) -> Result<Vec<LayerSpec>> {
    let mut layers = Vec::new();
    for _ in 0..scale.blocks {
        layers.push(LayerSpec::conv_freq(3, scale.block_maps));
        layers.push(LayerSpec::conv_freq(3, scale.block_maps));
        layers.push(LayerSpec::intramap(2, 1)?);
    }
    Ok(layers)
}

fn config(input: (usize, usize), layers: Vec<LayerSpec>) -> Result<NetworkConfig> {
    let mut c = NetworkConfig::new(layers);
    c.input = Shape::new(input.0, input.1, 1)?;
    if c.depth() > SHALLOW_DEPTH {
        c.layers[0].init_stddev = Some(DEEP_LAYER1_STDDEV);
    }
    Ok(c)
}

fn imp(scale: Scale, stride: usize) -> Result<NetworkConfig> {
    let mut layers = vec![
        LayerSpec::conv_time(scale.first_width, scale.first_maps),
        LayerSpec::intermap(scale.group, stride)?,
    ];
    layers.extend(time_blocks(scale)?);
    layers.push(LayerSpec::dense(scale.dense_units));
    layers.push(LayerSpec::softmax(scale.classes));
    config(scale.time_input, layers)
}

fn freq(scale: Scale) -> Result<NetworkConfig> {
    matched(scale, |units| {
        let mut layers = vec![
            LayerSpec::conv_freq(scale.first_width, scale.first_maps),
            LayerSpec::intermap(scale.group, scale.group)?,
        ];
        layers.extend(freq_blocks(scale)?);
        layers.push(LayerSpec::dense(units));
        layers.push(LayerSpec::softmax(scale.classes));
        config(scale.freq_input, layers)
    })
}

/// Non-intermap baseline with as many first-layer maps as `imp-toy` has
/// after pooling.
fn plain(scale: Scale) -> Result<NetworkConfig> {
    matched(scale, |units| {
        let mut layers = vec![LayerSpec::conv_time(scale.first_width, scale.first_maps / scale.group)];
        layers.extend(time_blocks(scale)?);
        layers.push(LayerSpec::dense(units));
        layers.push(LayerSpec::softmax(scale.classes));
        config(scale.time_input, layers)
    })
}

/// Picks the dense width that brings `with_units` closest to the
/// parameter count of `imp-toy`.
fn matched(scale: Scale, with_units: impl Fn(usize) -> Result<NetworkConfig>) -> Result<NetworkConfig> {
    let target = imp(scale, scale.group)?.param_count()?;
    // parameters are affine in the dense width: count = base + units·slope
    let base = with_units(1)?.param_count()?;
    let slope = with_units(2)?.param_count()? - base;
    let extra = (target as f64 - base as f64) / slope as f64;
    with_units(1 + extra.round().max(0.0) as usize)
}

fn build(name: &str, scale: Scale) -> Result<NetworkConfig> {
    match name {
        "imp-toy" => imp(scale, scale.group),
        "impo-toy" => imp(scale, 1),
        "freq-toy" => freq(scale),
        "cnn-toy-6L" => plain(scale),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::IntermapPoolSpec;
    use crate::model::{infer_shapes, LayerKind};

    #[test]
    fn imp_toy_layout() {
        let c = preset("imp-toy").unwrap();
        let shapes = infer_shapes(&c).unwrap();
        let s = |f, t, m| Shape::new(f, t, m).unwrap();
        assert_eq!(shapes[0], s(40, 21, 1));
        assert_eq!(shapes[1], s(1, 17, 64));
        assert_eq!(shapes[2], s(1, 17, 16));
        assert_eq!(shapes[5], s(1, 6, 16));
        assert_eq!(shapes[8], s(1, 1, 16));
        assert_eq!(*shapes.last().unwrap(), s(5, 1, 1));
        assert!(c.layers.iter().all(|l| l.init_stddev.is_none()));
    }

    #[test]
    fn impo_differs_only_in_stride() {
        let imp = preset("imp-toy").unwrap();
        let impo = preset("impo-toy").unwrap();
        assert_eq!(
            impo.layers[1].kind,
            LayerKind::IntermapPool(IntermapPoolSpec::overlapping(4).unwrap())
        );
        assert_eq!(imp.layers[2..], impo.layers[2..]);
        assert_eq!(infer_shapes(&impo).unwrap()[2].maps(), 61);
    }

    #[test]
    fn every_preset_infers_at_both_scales() {
        for name in PRESET_NAMES {
            let full = preset(name).unwrap();
            assert_eq!(full.input, Shape::new(40, 21, 1).unwrap());
            assert_eq!(full.classes().unwrap(), 5);
            let small = preset_reduced(name).unwrap();
            assert!(small.param_count().unwrap() < 1000, "{name}");
        }
        assert!(matches!(preset("vgg"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn compared_pairs_have_matched_budgets() {
        let within = |a: &str, b: &str| {
            let pa = preset(a).unwrap().param_count().unwrap() as f64;
            let pb = preset(b).unwrap().param_count().unwrap() as f64;
            (pa - pb).abs() / pa.max(pb) <= 0.10
        };
        assert!(within("imp-toy", "cnn-toy-6L"));
        assert!(within("imp-toy", "freq-toy"));
    }

    #[test]
    fn deep_configs_widen_first_layer_init() {
        let mut layers = vec![LayerSpec::conv_time(3, 4)];
        for _ in 0..7 {
            layers.push(LayerSpec::conv_time(3, 4));
        }
        layers.push(LayerSpec::softmax(2));
        let c = config((4, 30), layers).unwrap();
        assert_eq!(c.layers[0].init_stddev, Some(DEEP_LAYER1_STDDEV));
        assert!(c.layers[1..].iter().all(|l| l.init_stddev.is_none()));
    }
}
