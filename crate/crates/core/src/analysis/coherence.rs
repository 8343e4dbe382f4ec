use serde::Serialize;

use crate::error::{Error, Result};
use crate::layers::{ConvLayer, IntermapPoolSpec};
use crate::model::{Layer, Network};
use crate::scalar::Scalar;

use super::imp_front;

/// Mean pairwise cosine similarity of first-layer filters, inside intermap
/// groups and across them. `None` where no pair exists (e.g. groups of one).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupCoherenceReport {
    pub per_group: Vec<Option<f64>>,
    pub within: Option<f64>,
    /// Over pairs that never share a group.
    pub across: Option<f64>,
    pub gap: Option<f64>,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        (ab / (aa * bb).sqrt()).clamp(-1.0, 1.0)
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Coherence of flattened `filters` grouped by `spec`.
pub fn coherence_of(filters: &[Vec<f64>], spec: IntermapPoolSpec) -> Result<GroupCoherenceReport> {
    let n = filters.len();
    let groups = spec.output_maps(n)?;
    let mut shares = vec![vec![false; n]; n];
    let mut per_group = Vec::with_capacity(groups);
    for k in 0..groups {
        let members = spec.group(k);
        let mut sims = Vec::new();
        for i in members.clone() {
            for j in i + 1..members.end {
                shares[i][j] = true;
                sims.push(cosine(&filters[i], &filters[j]));
            }
        }
        per_group.push(mean(&sims));
    }
    let (mut within, mut across) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in i + 1..n {
            let c = cosine(&filters[i], &filters[j]);
            if shares[i][j] {
                within.push(c);
            } else if !(0..groups).any(|k| spec.group(k).contains(&i) && spec.group(k).contains(&j)) {
                across.push(c);
            }
        }
    }
    let (within, across) = (mean(&within), mean(&across));
    Ok(GroupCoherenceReport {
        per_group,
        within,
        across,
        gap: within.zip(across).map(|(w, a)| w - a),
    })
}

fn flattened<S: Scalar>(conv: &ConvLayer<S>) -> Result<Vec<Vec<f64>>> {
    let filters: Vec<Vec<f64>> = (0..conv.out_maps())
        .map(|k| conv.filter(k).data().iter().map(|v| v.as_f64()).collect())
        .collect();
    if filters.iter().any(|f| f.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("first-layer filters".into()));
    }
    Ok(filters)
}

pub fn group_coherence<S: Scalar>(net: &Network<S>) -> Result<GroupCoherenceReport> {
    let (conv, spec) = imp_front(net)?;
    coherence_of(&flattened(conv)?, spec)
}

/// Cosine similarity of each first-layer filter with the next one in map
/// order. Under overlapping groups, runs of high values are neighbourhoods
/// of related filters and dips mark where the feature category changes.
pub fn neighbor_similarity<S: Scalar>(net: &Network<S>) -> Result<Vec<f64>> {
    let Some(Layer::Conv { conv, .. }) = net.layers().first() else {
        return Err(Error::Config("first layer is not a convolution".into()));
    };
    let filters = flattened(conv)?;
    Ok(filters.windows(2).map(|w| cosine(&w[0], &w[1])).collect())
}
