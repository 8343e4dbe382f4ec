use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::io::{read_archive, write_archive, write_atomic};
use crate::rng::{derive_seed, seeded_rng, GaussianSource};
use crate::tensor::Tensor;

use super::{draw_shift, render, SynthSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub tensor: Tensor<f64>,
    pub label: usize,
    /// Frequency shift in bins.
    pub shift: i32,
}

/// Inputs with class labels; `shifts` is informational.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledSet {
    pub ids: Vec<String>,
    pub inputs: Vec<Tensor<f64>>,
    pub labels: Vec<usize>,
    pub shifts: Vec<i32>,
}

impl LabeledSet {
    pub fn from_samples(prefix: &str, samples: Vec<SynthSample>) -> Self {
        let mut set = LabeledSet::default();
        for (i, s) in samples.into_iter().enumerate() {
            set.ids.push(format!("{prefix}-{i:06}"));
            set.inputs.push(s.tensor);
            set.labels.push(s.label);
            set.shifts.push(s.shift);
        }
        set
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Samples per label, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let n = self.labels.iter().max().map_or(0, |&m| m + 1);
        let mut counts = vec![0; n];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    fn subset(&self, idx: &[usize]) -> LabeledSet {
        LabeledSet {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            shifts: idx.iter().map(|&i| self.shifts[i]).collect(),
        }
    }

    /// Splits off `fraction` of every class (rounded up, at least one when
    /// the class has two or more samples). Returns `(rest, held_out)`, both
    /// in original order.
    pub fn stratified_holdout(&self, fraction: f64, seed: u64) -> (LabeledSet, LabeledSet) {
        let mut rng = seeded_rng(seed);
        let mut held = vec![false; self.len()];
        for class in 0..self.class_counts().len() {
            let mut members: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
            if members.len() < 2 {
                continue;
            }
            members.shuffle(&mut rng);
            let k = ((members.len() as f64 * fraction).ceil() as usize).clamp(1, members.len() - 1);
            for &i in &members[..k] {
                held[i] = true;
            }
        }
        let (rest, out): (Vec<usize>, Vec<usize>) = (0..self.len()).partition(|&i| !held[i]);
        (self.subset(&rest), self.subset(&out))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: LabeledSet,
    pub valid: LabeledSet,
    /// Shifted beyond anything seen in training.
    pub test: LabeledSet,
}

const SPLITS: [&str; 3] = ["train", "valid", "test"];

/// Class-interleaved, stratified splits. Sample `i` of split `k` draws its
/// shift and noise from streams derived from `(seed, k, i)` only, so
/// generation order and thread count do not matter.
pub fn make_dataset(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let n_classes = spec.classes.len();
    let split = |k: usize, per_class: usize| -> LabeledSet {
        let split_seed = derive_seed(spec.seed, k as u64);
        let samples: Vec<SynthSample> = (0..per_class * n_classes)
            .into_par_iter()
            .map(|i| {
                let sample_seed = derive_seed(split_seed, i as u64);
                let mut rng = seeded_rng(derive_seed(sample_seed, 0));
                let shift = if k == 2 {
                    draw_shift(&mut rng, spec.test_shift, Some(spec.train_shift))
                } else {
                    draw_shift(&mut rng, spec.train_shift, None)
                };
                let mut noise = GaussianSource::new(derive_seed(sample_seed, 1), 0.0, spec.noise_stddev);
                render(&spec.classes[i % n_classes], shift, &mut noise)
            })
            .collect();
        LabeledSet::from_samples(SPLITS[k], samples)
    };
    Ok(Dataset {
        train: split(0, spec.train_per_class),
        valid: split(1, spec.valid_per_class),
        test: split(2, spec.test_per_class),
    })
}

impl Dataset {
    /// Writes `{train,valid,test}.impf` archives and `.csv` label files.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, set) in SPLITS.iter().zip([&self.train, &self.valid, &self.test]) {
            write_split(dir, name, set)?;
        }
        Ok(())
    }
}

pub fn write_split(dir: impl AsRef<Path>, name: &str, set: &LabeledSet) -> Result<()> {
    let dir = dir.as_ref();
    let entries = set
        .ids
        .iter()
        .zip(&set.inputs)
        .map(|(id, t)| Ok((id.clone(), FeatureMatrix::from_tensor(t)?)))
        .collect::<Result<Vec<_>>>()?;
    write_archive(dir.join(format!("{name}.impf")), &entries)?;
    let mut csv = String::from("utt_id,label,shift\n");
    for i in 0..set.len() {
        writeln!(csv, "{},{},{}", set.ids[i], set.labels[i], set.shifts[i]).unwrap();
    }
    write_atomic(dir.join(format!("{name}.csv")), csv.as_bytes())
}

/// Reads `{name}.impf` and its label file; every archive entry needs a
/// label row.
pub fn load_split(dir: impl AsRef<Path>, name: &str) -> Result<LabeledSet> {
    let dir = dir.as_ref();
    let entries = read_archive(dir.join(format!("{name}.impf")))?;
    let csv_path = dir.join(format!("{name}.csv"));
    let text = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut rows = HashMap::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: &str| Error::Parse {
            line: n + 1,
            message: format!("{}: {message}", csv_path.display()),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad("expected utt_id,label,shift"));
        }
        let label: usize = fields[1].trim().parse().map_err(|_| bad("bad label"))?;
        let shift: i32 = fields[2].trim().parse().map_err(|_| bad("bad shift"))?;
        rows.insert(fields[0].trim().to_string(), (label, shift));
    }
    let mut set = LabeledSet::default();
    for (id, feat) in entries {
        let &(label, shift) = rows
            .get(&id)
            .ok_or_else(|| Error::format("label file", format!("no label for `{id}`")))?;
        set.inputs.push(feat.to_tensor()?);
        set.ids.push(id);
        set.labels.push(label);
        set.shifts.push(shift);
    }
    Ok(set)
}
