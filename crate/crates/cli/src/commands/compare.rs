//! Matched-budget comparisons on the synthetic shifted-pattern task.
//!
//! Each seed drives the dataset, the initialization and the shuffles of
//! both variants, so paired rows share the same training data.

use std::fmt::Write as _;
use std::path::Path;

use impnet::io::write_atomic;
use impnet::model::{format_config, preset, save_network, NetworkConfig};
use impnet::optimizer::SgdConfig;
use impnet::synthdata::{make_dataset, SynthSpec};
use impnet::train::{accuracy, thread_pool, train, TrainConfig};
use impnet::Network;

use super::{create_dir, synth::read_spec, threads};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::Experiment;

/// Training recipe for the comparison runs. The datasets hold a few
/// thousand windows, so small batches and few epochs replace the
/// large-corpus schedule; layers after the first use fan-in scaled init
/// because a uniform 0.01 stalls the deeper stacks at chance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recipe {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub first_layer_stddev: f64,
    /// Weight stddev of later layers is `gain / sqrt(fan_in)`.
    pub gain: f64,
}

impl Default for Recipe {
    fn default() -> Self {
        Recipe {
            epochs: 15,
            batch_size: 32,
            learning_rate: 0.01,
            first_layer_stddev: 0.01,
            gain: std::f64::consts::SQRT_2,
        }
    }
}

impl Recipe {
    pub fn config(&self, name: &str, seed: u64) -> CliResult<NetworkConfig> {
        let mut c = preset(name)?.fan_in_scaled(self.gain, 0.0)?;
        c.layers[0].init_stddev = Some(self.first_layer_stddev);
        c.seed = seed;
        Ok(c)
    }

    pub fn train_config(&self, seed: u64, threads: usize) -> TrainConfig {
        TrainConfig {
            sgd: SgdConfig {
                learning_rate: self.learning_rate,
                ..SgdConfig::default()
            },
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            threads,
        }
    }
}

pub fn variants(experiment: Experiment) -> [&'static str; 2] {
    match experiment {
        Experiment::Axis => ["imp-toy", "freq-toy"],
        Experiment::Imp => ["imp-toy", "cnn-toy-6L"],
    }
}

/// Budgets of a compared pair may differ by at most this fraction.
pub const BUDGET_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub seed: u64,
    pub variant: &'static str,
    pub train_acc: f64,
    pub test_acc_shifted: f64,
}

pub const RESULTS_HEADER: &str = "seed,variant,train_acc,test_acc_shifted";

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    }
}

pub fn run(experiment: Experiment, out: &Path, seeds: u64, epochs: usize, spec_path: Option<&Path>) -> CliResult {
    if seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    let recipe = Recipe {
        epochs,
        ..Recipe::default()
    };
    let base_spec = read_spec(spec_path)?;
    let names = variants(experiment);
    let params = names
        .iter()
        .map(|n| Ok(recipe.config(n, 0)?.param_count()?))
        .collect::<CliResult<Vec<usize>>>()?;
    let (lo, hi) = (params[0].min(params[1]) as f64, params[0].max(params[1]) as f64);
    if (hi - lo) / hi > BUDGET_TOLERANCE {
        return Err(impnet::Error::Config(format!("{names:?} budgets {params:?} differ by more than 10%")).into());
    }
    create_dir(out)?;
    let config_text: String = names
        .iter()
        .map(|n| Ok(format_config(&recipe.config(n, 0)?)))
        .collect::<CliResult<Vec<_>>>()?
        .concat();
    let mut manifest = RunManifest::start("compare", None, None, 1, config_text.as_bytes());
    let pool = thread_pool(threads()?)?;

    let mut rows = Vec::new();
    let mut csv = format!("{RESULTS_HEADER}\n");
    for seed in 1..=seeds {
        let spec = SynthSpec {
            seed,
            ..base_spec.clone()
        };
        let data = make_dataset(&spec)?;
        for &name in &names {
            let mut net = Network::build(&recipe.config(name, seed)?)?;
            net.set_validation(false);
            train(&mut net, &data.train, &data.valid, &recipe.train_config(seed, pool.current_num_threads()), |r| {
                log::info!("{name} seed {seed}: {r}")
            })?;
            save_network(&net, out.join("models").join(format!("{name}-seed{seed}")))?;
            let row = Row {
                seed,
                variant: name,
                train_acc: accuracy(&net, &data.train, &pool)?,
                test_acc_shifted: accuracy(&net, &data.test, &pool)?,
            };
            println!("seed {seed} {name}: train {:.4}, shifted test {:.4}", row.train_acc, row.test_acc_shifted);
            writeln!(csv, "{},{},{},{}", row.seed, row.variant, row.train_acc, row.test_acc_shifted).unwrap();
            rows.push(row);
        }
    }
    write_atomic(out.join("results.csv"), csv.as_bytes())?;

    let mut summary = String::from("variant,params,median_train_acc,median_test_acc_shifted\n");
    for (&name, &p) in names.iter().zip(&params) {
        let mut train_accs: Vec<f64> = rows.iter().filter(|r| r.variant == name).map(|r| r.train_acc).collect();
        let mut test_accs: Vec<f64> = rows.iter().filter(|r| r.variant == name).map(|r| r.test_acc_shifted).collect();
        let (mt, ms) = (median(&mut train_accs), median(&mut test_accs));
        println!("{name}: {p} params, median train {mt:.4}, median shifted test {ms:.4}");
        writeln!(summary, "{name},{p},{mt},{ms}").unwrap();
        manifest.metrics.insert(format!("{name}.median_test_acc_shifted"), ms);
        manifest.metrics.insert(format!("{name}.median_train_acc"), mt);
    }
    write_atomic(out.join("summary.csv"), summary.as_bytes())?;
    manifest.finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&mut []).is_nan());
    }

    #[test]
    fn recipe_keeps_first_layer_small() {
        let c = Recipe::default().config("imp-toy", 7).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.layers[0].init_stddev, Some(0.01));
        assert!(c.layers[2].init_stddev.unwrap() > 0.01);
        assert_eq!(c.bias_stddev, 0.0);
    }

    #[test]
    fn pairs_have_matched_budgets() {
        for e in [Experiment::Axis, Experiment::Imp] {
            let [a, b] = variants(e).map(|n| Recipe::default().config(n, 0).unwrap().param_count().unwrap() as f64);
            assert!((a - b).abs() / a.max(b) <= BUDGET_TOLERANCE);
        }
    }
}
