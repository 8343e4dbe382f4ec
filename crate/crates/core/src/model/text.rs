//! Plain-text network configuration.
//!
//! ```text
//! # comments start with '#'
//! input = 40 21 1            # freq time maps
//! seed = 7
//! weight_stddev = 0.01
//! bias_stddev = 0.5
//! layer conv_time width=5 maps=64 [height=40] [act=relu|identity] [init=0.05]
//! layer conv_freq height=10 maps=64 [width=21] [act=...] [init=...]
//! layer relu
//! layer intermap r=4 [stride=4]
//! layer intramap p=1 q=2
//! layer dense units=256 [act=relu|identity] [init=...]
//! layer softmax classes=5 [init=...]
//! ```
//!
//! Settings may appear in any order; layers are taken in file order.
//! `stride` defaults to `r` (disjoint groups).

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::layers::{Activation, IntermapPoolSpec, IntramapPoolSpec};
use crate::tensor::Shape;

use super::{LayerKind, LayerSpec, NetworkConfig};

pub fn parse_config(text: &str) -> Result<NetworkConfig> {
    let mut config = NetworkConfig::new(Vec::new());
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("layer") {
            if rest.starts_with(char::is_whitespace) || rest.is_empty() {
                config.layers.push(parse_layer(rest.trim()).map_err(err)?);
                continue;
            }
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value` or `layer ...`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "input" => {
                let dims: Vec<usize> = value
                    .split_whitespace()
                    .map(|d| d.parse().map_err(|_| err(format!("bad dimension {d:?}"))))
                    .collect::<Result<_>>()?;
                if dims.len() != 3 {
                    return Err(err("input needs three dimensions: freq time maps".into()));
                }
                config.input = Shape::new(dims[0], dims[1], dims[2]).map_err(|e| err(e.to_string()))?;
            }
            "seed" => config.seed = value.parse().map_err(|_| err(format!("bad seed {value:?}")))?,
            "weight_stddev" => config.weight_stddev = parse_stddev(value).map_err(err)?,
            "bias_stddev" => config.bias_stddev = parse_stddev(value).map_err(err)?,
            other => return Err(err(format!("unknown setting {other:?}"))),
        }
    }
    if config.layers.is_empty() {
        return Err(Error::Config("configuration declares no layers".into()));
    }
    Ok(config)
}

fn parse_stddev(v: &str) -> std::result::Result<f64, String> {
    match v.parse::<f64>() {
        Ok(s) if s >= 0.0 && s.is_finite() => Ok(s),
        _ => Err(format!("bad standard deviation {v:?}")),
    }
}

fn parse_layer(body: &str) -> std::result::Result<LayerSpec, String> {
    let mut words = body.split_whitespace();
    let kind = words.next().ok_or("layer line names no kind")?;
    let mut args: BTreeMap<&str, &str> = BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected name=value, got {w:?}"))?;
        if args.insert(k, v).is_some() {
            return Err(format!("duplicate argument {k:?}"));
        }
    }
    let mut take = |k: &str| args.remove(k);
    let count = |v: Option<&str>, name: &str| -> std::result::Result<Option<usize>, String> {
        v.map(|s| s.parse::<usize>().map_err(|_| format!("bad {name} {s:?}")))
            .transpose()
    };
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| format!("{kind} needs {name}="));
    let act = |v: Option<&str>| match v {
        None | Some("relu") => Ok(Activation::Relu),
        Some("identity") => Ok(Activation::Identity),
        Some(o) => Err(format!("unknown activation {o:?}")),
    };

    let init = take("init").map(parse_stddev).transpose()?;
    let spec_kind = match kind {
        "conv_time" => LayerKind::ConvTime {
            height: count(take("height"), "height")?,
            width: need(count(take("width"), "width")?, "width")?,
            maps: need(count(take("maps"), "maps")?, "maps")?,
            activation: act(take("act"))?,
        },
        "conv_freq" => LayerKind::ConvFreq {
            height: need(count(take("height"), "height")?, "height")?,
            width: count(take("width"), "width")?,
            maps: need(count(take("maps"), "maps")?, "maps")?,
            activation: act(take("act"))?,
        },
        "relu" => LayerKind::Relu,
        "intramap" => {
            let p = need(count(take("p"), "p")?, "p")?;
            let q = need(count(take("q"), "q")?, "q")?;
            LayerKind::IntramapPool(IntramapPoolSpec::new(p, q).map_err(|e| e.to_string())?)
        }
        "intermap" => {
            let r = need(count(take("r"), "r")?, "r")?;
            let stride = count(take("stride"), "stride")?.unwrap_or(r);
            LayerKind::IntermapPool(IntermapPoolSpec::new(r, stride).map_err(|e| e.to_string())?)
        }
        "dense" => LayerKind::Dense {
            units: need(count(take("units"), "units")?, "units")?,
            activation: act(take("act"))?,
        },
        "softmax" => LayerKind::SoftmaxOut {
            classes: need(count(take("classes"), "classes")?, "classes")?,
        },
        other => return Err(format!("unknown layer kind {other:?}")),
    };
    if let Some(k) = args.keys().next() {
        return Err(format!("{kind} does not take {k:?}"));
    }
    if init.is_some() && !spec_kind.has_params() {
        return Err(format!("{kind} has no parameters to initialize"));
    }
    Ok(LayerSpec {
        kind: spec_kind,
        init_stddev: init,
    })
}

/// Canonical text form; `parse_config(&format_config(c)) == c`.
pub fn format_config(config: &NetworkConfig) -> String {
    let mut out = String::new();
    let s = config.input;
    writeln!(out, "input = {} {} {}", s.freq_bins(), s.time_steps(), s.maps()).unwrap();
    writeln!(out, "seed = {}", config.seed).unwrap();
    writeln!(out, "weight_stddev = {:?}", config.weight_stddev).unwrap();
    writeln!(out, "bias_stddev = {:?}", config.bias_stddev).unwrap();
    for layer in &config.layers {
        let mut line = format!("layer {}", layer.kind.name());
        match &layer.kind {
            LayerKind::ConvTime {
                height,
                width,
                maps,
                activation,
            } => {
                if let Some(h) = height {
                    write!(line, " height={h}").unwrap();
                }
                write!(line, " width={width} maps={maps} act={}", activation.name()).unwrap();
            }
            LayerKind::ConvFreq {
                height,
                width,
                maps,
                activation,
            } => {
                write!(line, " height={height}").unwrap();
                if let Some(w) = width {
                    write!(line, " width={w}").unwrap();
                }
                write!(line, " maps={maps} act={}", activation.name()).unwrap();
            }
            LayerKind::Relu => {}
            LayerKind::IntramapPool(p) => write!(line, " p={} q={}", p.p, p.q).unwrap(),
            LayerKind::IntermapPool(p) => write!(line, " r={} stride={}", p.r, p.stride).unwrap(),
            LayerKind::Dense { units, activation } => {
                write!(line, " units={units} act={}", activation.name()).unwrap()
            }
            LayerKind::SoftmaxOut { classes } => write!(line, " classes={classes}").unwrap(),
        }
        if let Some(init) = layer.init_stddev {
            write!(line, " init={init:?}").unwrap();
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{preset, PRESET_NAMES};

    #[test]
    fn parses_documented_example() {
        let text = "\
# imp example
input = 40 21 1
seed = 7
layer conv_time width=5 maps=8 init=0.05
layer intermap r=4      # disjoint
layer intramap p=1 q=2
layer dense units=4 act=identity
layer softmax classes=3
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.layers.len(), 5);
        assert_eq!(c.layers[0].init_stddev, Some(0.05));
        assert_eq!(
            c.layers[1].kind,
            LayerKind::IntermapPool(IntermapPoolSpec::disjoint(4).unwrap())
        );
        assert_eq!(c.weight_stddev, 0.01);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "input = 40 21 1\nlayer conv_time maps=3\n";
        match parse_config(text) {
            Err(Error::Parse { line: 2, message }) => assert!(message.contains("width")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("bogus = 1\nlayer relu"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("layer relu init=0.1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_config("layer dense units=3 extra=1"), Err(Error::Parse { .. })));
        assert!(parse_config("seed = 1\n").is_err());
    }

    #[test]
    fn presets_round_trip_through_text() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            assert_eq!(parse_config(&format_config(&c)).unwrap(), c, "{name}");
        }
    }
}
