use std::path::Path;

use impnet::analysis::{export_filters, group_coherence, neighbor_similarity, shift_invariance, write_report};
use impnet::model::load_network;
use impnet::synthdata::{parse_spec, SynthSpec};
use impnet::{Error, Network};

use super::create_dir;
use crate::error::CliResult;

/// Class templates come from the dataset's `spec.txt` when present.
fn dataset_spec(data: Option<&Path>) -> CliResult<SynthSpec> {
    let Some(dir) = data else {
        return Ok(SynthSpec::default());
    };
    let path = dir.join("spec.txt");
    if !path.exists() {
        log::warn!("{} not found; using the default class templates", path.display());
        return Ok(SynthSpec::default());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(parse_spec(&text)?)
}

pub fn run(model: &Path, data: Option<&Path>, out: &Path, max_shift: u32) -> CliResult {
    let net: Network = load_network(model)?;
    let spec = dataset_spec(data)?;
    create_dir(out)?;

    let (coherence, invariance) = match group_coherence(&net) {
        Ok(c) => (Some(c), Some(shift_invariance(&net, &spec.classes, max_shift)?)),
        Err(e @ Error::Config(_)) => {
            eprintln!("warning: {e}; skipping coherence and shift invariance");
            (None, None)
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(c) = &coherence {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        println!(
            "group coherence: within {}, across {}, gap {}",
            fmt(c.within),
            fmt(c.across),
            fmt(c.gap)
        );
    }
    if let Some(inv) = &invariance {
        for row in &inv.rows {
            println!(
                "shift {}: pre {:.4}, post {:.4}, ratio {:.4}",
                row.shift, row.pre, row.post, row.ratio
            );
        }
    }
    let neighbors = neighbor_similarity(&net)?;
    write_report(out.join("report.jsonl"), coherence.as_ref(), invariance.as_ref(), Some(&neighbors))?;
    let files = export_filters(&net, 1, out)?;
    println!("{} layer-1 filter images -> {}", files.iter().filter(|p| p.extension().is_some_and(|e| e == "pgm")).count(), out.display());
    Ok(())
}
