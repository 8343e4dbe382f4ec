use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::model::{Layer, Network};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// 8-bit binary PGM of a filter, min–max normalized. Rows run from the
/// highest frequency bin down to bin 0; input maps are tiled left to right.
/// A constant filter maps to all-zero pixels.
pub fn pgm_bytes<S: Scalar>(filter: &Tensor<S>) -> Vec<u8> {
    let s = filter.shape();
    let (rows, cols) = (s.freq_bins(), s.time_steps() * s.maps());
    let values: Vec<f64> = filter.data().iter().map(|v| v.as_f64()).collect();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for row in 0..rows {
        let f = rows - 1 - row;
        for col in 0..cols {
            let (g, t) = (col / s.time_steps(), col % s.time_steps());
            let v = values[s.index(f, t, g)];
            let px = if hi > lo { (255.0 * (v - lo) / (hi - lo)).round() } else { 0.0 };
            out.push(px as u8);
        }
    }
    out
}

/// Writes `L{layer}_g{group}_m{map}.pgm` for every filter of conv layer
/// `layer` (1-based) plus `L{layer}_weights.csv` with the raw weights in
/// storage order. `group` is `map / r` for the intermap layer that follows,
/// or the map index when none does.
pub fn export_filters<S: Scalar>(net: &Network<S>, layer: usize, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let index = layer.checked_sub(1).filter(|&i| i < net.layers().len()).ok_or_else(|| {
        Error::OutOfRange {
            context: "export layer",
            detail: format!("layer {layer} of {}", net.layers().len()),
        }
    })?;
    let conv = match &net.layers()[index] {
        Layer::Conv { conv, .. } => conv,
        other => {
            return Err(Error::Config(format!(
                "layer {layer} is {}, not convolutional",
                other.kind_name()
            )))
        }
    };
    let r = match net.layers().get(index + 1) {
        Some(Layer::IntermapPool(spec)) => spec.r,
        _ => 1,
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(conv.out_maps() + 1);
    for k in 0..conv.out_maps() {
        let path = dir.join(format!("L{layer}_g{}_m{k}.pgm", k / r));
        write_atomic(&path, &pgm_bytes(&conv.filter(k)))?;
        files.push(path);
    }
    let w = conv.weights();
    let ws = w.shape();
    let mut csv = String::from("map,in_map,freq,time,value\n");
    for (i, v) in w.data().iter().enumerate() {
        let (f, t, m) = ws.coords(i);
        writeln!(csv, "{},{},{f},{t},{}", m / conv.in_maps(), m % conv.in_maps(), v.as_f64()).unwrap();
    }
    let path = dir.join(format!("L{layer}_weights.csv"));
    write_atomic(&path, csv.as_bytes())?;
    files.push(path);
    Ok(files)
}
