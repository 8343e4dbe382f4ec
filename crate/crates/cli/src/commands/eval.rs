use std::fmt::Write as _;
use std::path::Path;

use impnet::io::write_atomic;
use impnet::model::load_network;
use impnet::synthdata::{load_split, LabeledSet};
use impnet::train::{confusion, thread_pool};
use impnet::{Error, Network};

use super::threads;
use crate::error::CliResult;

/// `dir` plus split name, or a single `name.impf` archive.
pub fn load_eval_set(data: &Path, split: &str) -> CliResult<LabeledSet> {
    if data.is_file() {
        let dir = data.parent().unwrap_or(Path::new("."));
        let name = data.file_stem().unwrap_or_default().to_string_lossy();
        return Ok(load_split(dir, &name)?);
    }
    Ok(load_split(data, split)?)
}

/// Rows are true classes, columns predictions.
pub fn confusion_csv(counts: &[Vec<usize>]) -> String {
    let mut out = String::from("label");
    for p in 0..counts.len() {
        write!(out, ",pred_{p}").unwrap();
    }
    out.push('\n');
    for (l, row) in counts.iter().enumerate() {
        write!(out, "{l}").unwrap();
        for c in row {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn run(model: &Path, data: &Path, split: &str, confusion_path: Option<&Path>) -> CliResult {
    let net: Network = load_network(model)?;
    let set = load_eval_set(data, split)?;
    if set.is_empty() {
        return Err(Error::Config("evaluation set is empty".into()).into());
    }
    if let Some(x) = set.inputs.iter().find(|x| x.shape() != net.input_shape()) {
        return Err(Error::mismatch("evaluation input", net.input_shape(), x.shape()).into());
    }
    if let Some(&l) = set.labels.iter().find(|&&l| l >= net.classes()) {
        return Err(Error::OutOfRange {
            context: "evaluation labels",
            detail: format!("label {l} with {} classes", net.classes()),
        }
        .into());
    }
    let counts = confusion(&net, &set, &thread_pool(threads()?)?)?;
    let hits: usize = (0..counts.len()).map(|k| counts[k][k]).sum();
    let acc = hits as f64 / set.len() as f64;
    println!("accuracy {acc:.6} ({hits}/{})", set.len());
    for (k, row) in counts.iter().enumerate() {
        let n: usize = row.iter().sum();
        if n > 0 {
            println!("  class {k}: {:.4} ({}/{n})", row[k] as f64 / n as f64, row[k]);
        }
    }
    let path = confusion_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| model.join(format!("confusion_{split}.csv")));
    write_atomic(&path, confusion_csv(&counts).as_bytes())?;
    Ok(())
}

