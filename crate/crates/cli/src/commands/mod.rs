pub mod analyze;
pub mod compare;
pub mod eval;
pub mod features;
pub mod gradcheck;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use impnet::model::{format_config, parse_config, preset, NetworkConfig};
use impnet::synthdata::{load_split, LabeledSet};

use crate::error::{CliError, CliResult};
use crate::ModelSource;

/// Fraction of training data held out for the epoch gate when a dataset
/// has no validation split of its own.
pub const HOLDOUT_FRACTION: f64 = 0.1;

/// A parsed config together with the bytes it came from.
pub struct LoadedConfig {
    pub config: NetworkConfig,
    pub bytes: Vec<u8>,
    pub path: Option<PathBuf>,
}

pub fn load_config(source: &ModelSource) -> CliResult<LoadedConfig> {
    match (&source.config, &source.preset) {
        (Some(path), None) => {
            let bytes = std::fs::read(path).map_err(|e| impnet::Error::io(path, e))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| impnet::Error::format("config", format!("{} is not UTF-8", path.display())))?;
            Ok(LoadedConfig {
                config: parse_config(&text)?,
                bytes,
                path: Some(path.clone()),
            })
        }
        (None, Some(name)) => {
            let config = preset(name)?;
            Ok(LoadedConfig {
                bytes: format_config(&config).into_bytes(),
                config,
                path: None,
            })
        }
        _ => Err(CliError::usage("exactly one of --config or --preset is required")),
    }
}

pub fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| impnet::Error::io(dir, e))?;
    Ok(())
}

/// Training and validation sets from a dataset directory. Without a
/// `valid` split, a stratified slice of the training data is held out.
pub fn training_sets(dir: &Path, seed: u64) -> CliResult<(LabeledSet, LabeledSet)> {
    let train = load_split(dir, "train")?;
    if dir.join("valid.impf").exists() {
        return Ok((train, load_split(dir, "valid")?));
    }
    log::info!("no validation split in {}; holding out {HOLDOUT_FRACTION} of training data", dir.display());
    Ok(train.stratified_holdout(HOLDOUT_FRACTION, seed))
}

pub fn threads() -> CliResult<usize> {
    Ok(impnet::train::threads_from_env()?)
}
