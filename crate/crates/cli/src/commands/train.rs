use std::fmt::Write as _;
use std::path::PathBuf;

use impnet::io::write_atomic;
use impnet::model::save_network;
use impnet::optimizer::SgdConfig;
use impnet::train::{accuracy, thread_pool, train, EpochRecord, TrainConfig};
use impnet::Network;

use super::{create_dir, load_config, threads, training_sets};
use crate::error::CliResult;
use crate::manifest::RunManifest;
use crate::ModelSource;

pub struct TrainArgs {
    pub model: ModelSource,
    pub data: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    pub l2: f64,
}

/// First line of the epoch log: every setting that shapes the run.
pub fn log_header(cfg: &TrainConfig) -> String {
    format!(
        "# lr={} batch={} epochs={} momentum={} l2={} seed={}",
        cfg.sgd.learning_rate, cfg.batch_size, cfg.epochs, cfg.sgd.momentum, cfg.sgd.l2_decay, cfg.seed
    )
}

pub fn run(args: &TrainArgs) -> CliResult {
    let loaded = load_config(&args.model)?;
    let mut config = loaded.config;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let cfg = TrainConfig {
        sgd: SgdConfig {
            learning_rate: args.lr,
            momentum: args.momentum,
            l2_decay: args.l2,
        },
        batch_size: args.batch,
        epochs: args.epochs,
        seed: config.seed,
        threads: threads()?,
    };
    let mut net = Network::build(&config)?;
    let (train_set, valid_set) = training_sets(&args.data, cfg.seed)?;
    create_dir(&args.out)?;
    let mut manifest = RunManifest::start(
        "train",
        loaded.path.as_deref(),
        Some(&args.data),
        cfg.seed,
        &loaded.bytes,
    );

    let header = log_header(&cfg);
    println!("{header}");
    let mut log = format!("{header}\n{}\n", EpochRecord::CSV_HEADER);
    let report = train(&mut net, &train_set, &valid_set, &cfg, |r| {
        println!("{r}");
        writeln!(log, "{r}").unwrap();
    })?;
    write_atomic(args.out.join("epochs.csv"), log.as_bytes())?;
    save_network(&net, args.out.join("model"))?;

    let pool = thread_pool(cfg.threads)?;
    let train_acc = accuracy(&net, &train_set, &pool)?;
    let valid_acc = accuracy(&net, &valid_set, &pool)?;
    println!(
        "best validation cost {} (initial {}); train acc {train_acc:.4}, valid acc {valid_acc:.4}",
        report.best_val_cost, report.initial_val_cost
    );
    manifest.metrics.insert("initial_val_cost".into(), report.initial_val_cost);
    manifest.metrics.insert("best_val_cost".into(), report.best_val_cost);
    manifest.metrics.insert("train_acc".into(), train_acc);
    manifest.metrics.insert("valid_acc".into(), valid_acc);
    manifest.finish(&args.out)
}

