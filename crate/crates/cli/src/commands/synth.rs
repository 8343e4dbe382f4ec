use std::path::Path;

use impnet::io::write_atomic;
use impnet::synthdata::{make_dataset, parse_spec, SynthSpec};

use crate::error::CliResult;

pub fn read_spec(path: Option<&Path>) -> CliResult<SynthSpec> {
    match path {
        None => Ok(SynthSpec::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| impnet::Error::io(p, e))?;
            Ok(parse_spec(&text)?)
        }
    }
}

pub fn run(spec_path: Option<&Path>, out: &Path, seed: Option<u64>) -> CliResult {
    let mut spec = read_spec(spec_path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let data = make_dataset(&spec)?;
    data.write(out)?;
    write_atomic(out.join("spec.txt"), spec.to_text().as_bytes())?;
    println!(
        "{} classes: {} train, {} valid, {} test -> {}",
        spec.classes.len(),
        data.train.len(),
        data.valid.len(),
        data.test.len(),
        out.display()
    );
    Ok(())
}
