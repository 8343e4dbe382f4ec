//! Model snapshots: a directory holding the network configuration, a
//! manifest listing parameter names in network order, and one tensor
//! container per parameter.
//!
//! ```text
//! <dir>/config.txt      text configuration
//! <dir>/manifest.txt    one `name file` line per parameter
//! <dir>/<name>.impt     tensor container
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_tensor, write_tensor};
use crate::optimizer::Parameters;
use crate::scalar::Scalar;

use super::{format_config, parse_config, Network};

pub fn save_network<S: Scalar>(net: &Network<S>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config_path = dir.join("config.txt");
    fs::write(&config_path, format_config(net.config())).map_err(|e| Error::io(&config_path, e))?;
    let mut manifest = String::new();
    for (name, p) in net.param_names().iter().zip(net.params()) {
        let file = format!("{name}.impt");
        write_tensor(dir.join(&file), p)?;
        manifest.push_str(&format!("{name} {file}\n"));
    }
    let manifest_path = dir.join("manifest.txt");
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))
}

pub fn load_network<S: Scalar>(dir: impl AsRef<Path>) -> Result<Network<S>> {
    let dir = dir.as_ref();
    let config_path = dir.join("config.txt");
    let text = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
    let mut net = Network::build(&parse_config(&text)?)?;
    let manifest_path = dir.join("manifest.txt");
    let manifest = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let expected = net.param_names();
    let mut values = Vec::with_capacity(expected.len());
    let mut lines = manifest.lines().filter(|l| !l.trim().is_empty());
    for name in &expected {
        let line = lines
            .next()
            .ok_or_else(|| Error::format("snapshot manifest", format!("missing entry for {name}")))?;
        let (got, file) = line
            .split_once(' ')
            .ok_or_else(|| Error::format("snapshot manifest", format!("bad line {line:?}")))?;
        if got != name {
            return Err(Error::format(
                "snapshot manifest",
                format!("expected {name}, found {got}"),
            ));
        }
        values.push(read_tensor(dir.join(file.trim()))?);
    }
    if lines.next().is_some() {
        return Err(Error::format("snapshot manifest", "more entries than parameters"));
    }
    net.set_params(&values)?;
    Ok(net)
}
