//! Diagnostics for trained networks: how alike the filters pooled together
//! are, how much the intermap layer shrinks the effect of frequency shifts,
//! and filter images for inspection.

mod coherence;
mod export;
mod invariance;

pub use coherence::{coherence_of, group_coherence, neighbor_similarity, GroupCoherenceReport};
pub use export::{export_filters, pgm_bytes};
pub use invariance::{relative_distance, shift_invariance, tap_distances, InvarianceReport, ShiftDistance};

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::layers::{ConvLayer, IntermapPoolSpec};
use crate::model::{Layer, Network};
use crate::scalar::Scalar;

/// First conv layer and the intermap pooling right after it.
pub(crate) fn imp_front<S: Scalar>(net: &Network<S>) -> Result<(&ConvLayer<S>, IntermapPoolSpec)> {
    match net.layers() {
        [Layer::Conv { conv, .. }, Layer::IntermapPool(spec), ..] => Ok((conv, *spec)),
        _ => Err(Error::Config(
            "architecture lacks an intermap pooling layer directly after the first convolution".into(),
        )),
    }
}

/// One JSON object per line.
pub fn report_lines(
    coherence: Option<&GroupCoherenceReport>,
    invariance: Option<&InvarianceReport>,
    neighbors: Option<&[f64]>,
) -> String {
    let mut records: Vec<Value> = Vec::new();
    if let Some(c) = coherence {
        records.push(json!({
            "metric": "group_coherence",
            "within": c.within,
            "across": c.across,
            "gap": c.gap,
            "per_group": c.per_group,
        }));
    }
    if let Some(inv) = invariance {
        for row in &inv.rows {
            records.push(json!({
                "metric": "shift_invariance",
                "shift": row.shift,
                "pre": row.pre,
                "post": row.post,
                "ratio": row.ratio,
            }));
        }
    }
    if let Some(curve) = neighbors {
        records.push(json!({ "metric": "neighbor_similarity", "curve": curve }));
    }
    let mut out = String::new();
    for r in records {
        writeln!(out, "{r}").unwrap();
    }
    out
}

pub fn write_report(
    path: impl AsRef<Path>,
    coherence: Option<&GroupCoherenceReport>,
    invariance: Option<&InvarianceReport>,
    neighbors: Option<&[f64]>,
) -> Result<()> {
    write_atomic(path, report_lines(coherence, invariance, neighbors).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_one_record_per_line() {
        let c = GroupCoherenceReport {
            per_group: vec![Some(0.5)],
            within: Some(0.5),
            across: Some(0.1),
            gap: Some(0.4),
        };
        let inv = InvarianceReport {
            rows: vec![
                ShiftDistance {
                    shift: 1,
                    pre: 0.2,
                    post: 0.1,
                    ratio: 0.5,
                },
                ShiftDistance {
                    shift: 2,
                    pre: 0.4,
                    post: 0.4,
                    ratio: 1.0,
                },
            ],
        };
        let text = report_lines(Some(&c), Some(&inv), Some(&[0.5, -0.25]));
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0]["metric"], "group_coherence");
        assert_eq!(lines[2]["ratio"], 1.0);
        assert_eq!(lines[3]["curve"][1], -0.25);
        assert_eq!(report_lines(None, None, None), "");
    }
}
