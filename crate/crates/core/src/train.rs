//! Minibatch SGD with the epoch accept/reject gate.
//!
//! Per-sample gradients are summed in fixed chunks of [`REDUCTION_CHUNK`]
//! samples in batch order, and chunk partials are then summed in chunk
//! order. Chunks may run on any number of threads without changing a single
//! bit of the result.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Network, Trace};
use crate::optimizer::{Decision, EpochGate, SgdConfig, SgdState};
use crate::rng::{derive_seed, seeded_rng};
use crate::synthdata::LabeledSet;
use crate::tensor::Tensor;

pub const REDUCTION_CHUNK: usize = 16;
pub const THREADS_ENV: &str = "IMPNET_THREADS";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub sgd: SgdConfig,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sgd: SgdConfig::default(),
            batch_size: 512,
            epochs: EpochGate::<f64>::DEFAULT_MAX_EPOCHS,
            seed: 0,
            threads: 1,
        }
    }
}

/// Worker count from `IMPNET_THREADS`, defaulting to 1.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::Config(format!("{THREADS_ENV}={v} is not a positive integer"))),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_cost: f64,
    /// Rate used during the epoch (before any halving).
    pub learning_rate: f64,
    pub decision: Decision,
}

impl EpochRecord {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,val_cost,lr,decision";
}

impl fmt::Display for EpochRecord {
    /// One CSV row; floats use the shortest exact representation.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decision = match self.decision {
            Decision::Accept => "accept",
            Decision::RejectAndHalve => "reject",
        };
        write!(
            f,
            "{},{},{},{},{}",
            self.epoch, self.train_loss, self.val_cost, self.learning_rate, decision
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial_val_cost: f64,
    pub best_val_cost: f64,
    pub records: Vec<EpochRecord>,
}

fn check_set(net: &Network<f64>, set: &LabeledSet, what: &'static str) -> Result<()> {
    if set.inputs.len() != set.labels.len() {
        return Err(Error::mismatch(what, set.inputs.len(), set.labels.len()));
    }
    for x in &set.inputs {
        if x.shape() != net.input_shape() {
            return Err(Error::mismatch(what, net.input_shape(), x.shape()));
        }
    }
    if let Some(&l) = set.labels.iter().find(|&&l| l >= net.classes()) {
        return Err(Error::OutOfRange {
            context: what,
            detail: format!("label {l} with {} classes", net.classes()),
        });
    }
    Ok(())
}

fn add_into(acc: &mut [Tensor<f64>], grads: &[Tensor<f64>]) -> Result<()> {
    for (a, g) in acc.iter_mut().zip(grads) {
        a.add_scaled(1.0, g)?;
    }
    Ok(())
}

/// Summed loss and summed parameter gradients over `idx`.
fn chunk_gradient(net: &Network<f64>, set: &LabeledSet, idx: &[usize]) -> Result<(f64, Vec<Tensor<f64>>)> {
    let mut loss = 0.0;
    let mut acc: Option<Vec<Tensor<f64>>> = None;
    for &i in idx {
        let trace: Trace<f64> = net.forward_trace(&set.inputs[i])?;
        let g = net.backward_trace(&trace, set.labels[i])?;
        loss += g.loss;
        match &mut acc {
            None => acc = Some(g.params),
            Some(a) => add_into(a, &g.params)?,
        }
    }
    Ok((loss, acc.unwrap_or_default()))
}

/// Mean loss and mean gradients over `idx` with the fixed reduction order.
pub fn batch_gradient(
    net: &Network<f64>,
    set: &LabeledSet,
    idx: &[usize],
    pool: &rayon::ThreadPool,
) -> Result<(f64, Vec<Tensor<f64>>)> {
    let partials: Vec<_> = pool.install(|| {
        idx.par_chunks(REDUCTION_CHUNK)
            .map(|c| chunk_gradient(net, set, c))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut parts = partials.into_iter();
    let (mut loss, mut grads) = parts.next().ok_or_else(|| Error::Config("empty minibatch".into()))?;
    for (l, g) in parts {
        loss += l;
        add_into(&mut grads, &g)?;
    }
    let scale = 1.0 / idx.len() as f64;
    grads.iter_mut().for_each(|g| g.scale(scale));
    Ok((loss * scale, grads))
}

/// Mean cross-entropy over the whole set, same reduction order as training.
pub fn mean_cost(net: &Network<f64>, set: &LabeledSet, pool: &rayon::ThreadPool) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Config("cannot evaluate cost on an empty set".into()));
    }
    let partials: Vec<f64> = pool.install(|| {
        set.inputs
            .par_chunks(REDUCTION_CHUNK)
            .zip(set.labels.par_chunks(REDUCTION_CHUNK))
            .map(|(xs, ls)| {
                xs.iter()
                    .zip(ls)
                    .map(|(x, &l)| net.loss(x, l))
                    .sum::<Result<f64>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(partials.iter().sum::<f64>() / set.len() as f64)
}

pub fn predictions(net: &Network<f64>, set: &LabeledSet, pool: &rayon::ThreadPool) -> Result<Vec<usize>> {
    pool.install(|| set.inputs.par_iter().map(|x| net.predict(x)).collect())
}

pub fn accuracy(net: &Network<f64>, set: &LabeledSet, pool: &rayon::ThreadPool) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Config("cannot score an empty set".into()));
    }
    let pred = predictions(net, set, pool)?;
    let hits = pred.iter().zip(&set.labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / set.len() as f64)
}

/// `counts[true][predicted]`.
pub fn confusion(net: &Network<f64>, set: &LabeledSet, pool: &rayon::ThreadPool) -> Result<Vec<Vec<usize>>> {
    let n = net.classes();
    let mut counts = vec![vec![0; n]; n];
    for (p, &l) in predictions(net, set, pool)?.into_iter().zip(&set.labels) {
        counts[l][p] += 1;
    }
    Ok(counts)
}

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Trains `net` in place and leaves it at the best accepted parameters.
///
/// The gate starts from the validation cost of the initial parameters, so
/// an epoch must improve on the untrained model to be kept. Shuffles depend
/// only on `(seed, epoch)`, not on earlier decisions.
pub fn train(
    net: &mut Network<f64>,
    train_set: &LabeledSet,
    valid_set: &LabeledSet,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    check_set(net, train_set, "training set")?;
    check_set(net, valid_set, "validation set")?;
    if train_set.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let pool = thread_pool(cfg.threads)?;
    let mut state = SgdState::new(cfg.sgd, &*net)?;
    let initial_val_cost = mean_cost(net, valid_set, &pool)?;
    if !initial_val_cost.is_finite() {
        return Err(Error::NonFinite("initial validation cost".into()));
    }
    let mut gate = EpochGate::new(&*net, &state, initial_val_cost, cfg.epochs);
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    while !gate.finished() {
        let epoch = gate.epochs_done() + 1;
        let mut rng = seeded_rng(derive_seed(cfg.seed, epoch as u64));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let learning_rate = state.learning_rate;
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let (loss, grads) = batch_gradient(net, train_set, batch, &pool)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss {loss} at epoch {epoch}, batch {b} (learning rate {learning_rate})"
                )));
            }
            loss_sum += loss * batch.len() as f64;
            state.step(net, &grads).map_err(|e| {
                Error::NonFinite(format!("update at epoch {epoch}, batch {b}: {e}"))
            })?;
        }
        let val_cost = mean_cost(net, valid_set, &pool)?;
        if !val_cost.is_finite() {
            return Err(Error::NonFinite(format!("validation cost at epoch {epoch}")));
        }
        let decision = gate.judge(val_cost, net, &mut state)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_cost,
            learning_rate,
            decision,
        };
        log::info!("epoch {record}");
        on_epoch(&record);
        records.push(record);
    }
    Ok(TrainReport {
        initial_val_cost,
        best_val_cost: gate.best_cost(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LayerSpec, NetworkConfig};
    use crate::optimizer::Parameters;
    use crate::tensor::Shape;

    fn toy_problem() -> (Network<f64>, LabeledSet) {
        let mut c = NetworkConfig::new(vec![
            LayerSpec::conv_time(2, 3),
            LayerSpec::dense(4),
            LayerSpec::softmax(2),
        ]);
        c.input = Shape::new(3, 4, 1).unwrap();
        c.weight_stddev = 0.3;
        c.bias_stddev = 0.1;
        let net = Network::build(&c).unwrap();
        let mut set = LabeledSet::default();
        for i in 0..40 {
            let label = i % 2;
            let x = Tensor::from_fn(Shape::new(3, 4, 1).unwrap(), |f, t, _| {
                let v = ((i * 7 + f * 3 + t) % 5) as f64 * 0.1;
                if label == 1 && f == 0 { v + 1.0 } else { v }
            });
            set.ids.push(format!("s{i}"));
            set.inputs.push(x);
            set.labels.push(label);
            set.shifts.push(0);
        }
        (net, set)
    }

    #[test]
    fn reduction_is_thread_count_independent() {
        let (net, set) = toy_problem();
        let idx: Vec<usize> = (0..37).collect();
        let one = batch_gradient(&net, &set, &idx, &thread_pool(1).unwrap()).unwrap();
        let four = batch_gradient(&net, &set, &idx, &thread_pool(4).unwrap()).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn batch_gradient_is_mean_of_samples() {
        let (net, set) = toy_problem();
        let (loss, grads) = batch_gradient(&net, &set, &[3, 8], &thread_pool(1).unwrap()).unwrap();
        let a = net.backward_trace(&net.forward_trace(&set.inputs[3]).unwrap(), set.labels[3]).unwrap();
        let b = net.backward_trace(&net.forward_trace(&set.inputs[8]).unwrap(), set.labels[8]).unwrap();
        assert!((loss - (a.loss + b.loss) / 2.0).abs() < 1e-15);
        for ((g, x), y) in grads.iter().zip(&a.params).zip(&b.params) {
            for ((&gv, &xv), &yv) in g.data().iter().zip(x.data()).zip(y.data()) {
                assert!((gv - (xv + yv) / 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn training_learns_and_is_reproducible() {
        let (net0, set) = toy_problem();
        let cfg = TrainConfig {
            batch_size: 8,
            epochs: 15,
            sgd: SgdConfig {
                learning_rate: 0.1,
                ..SgdConfig::default()
            },
            ..TrainConfig::default()
        };
        let run = |threads| {
            let mut net = net0.clone();
            let report = train(&mut net, &set, &set, &TrainConfig { threads, ..cfg }, |_| {}).unwrap();
            (net, report)
        };
        let (net_a, rep_a) = run(1);
        let (net_b, rep_b) = run(3);
        assert_eq!(rep_a, rep_b);
        assert_eq!(net_a.params(), net_b.params());
        assert!(rep_a.best_val_cost < rep_a.initial_val_cost);
        assert!(accuracy(&net_a, &set, &thread_pool(1).unwrap()).unwrap() > 0.9);
        assert_eq!(rep_a.records.len(), 15);
    }

    #[test]
    fn zero_epochs_leaves_model_untouched() {
        let (net0, set) = toy_problem();
        let mut net = net0.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &set, &set, &cfg, |_| {}).unwrap();
        assert!(report.records.is_empty());
        assert_eq!(net.params(), net0.params());
    }

    #[test]
    fn exploding_rate_aborts_with_diagnostic() {
        let (mut net, set) = toy_problem();
        let cfg = TrainConfig {
            batch_size: 4,
            epochs: 3,
            sgd: SgdConfig {
                learning_rate: 1e300,
                momentum: 0.0,
                l2_decay: 0.0,
            },
            ..TrainConfig::default()
        };
        match train(&mut net, &set, &set, &cfg, |_| {}) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains("epoch 1"), "{msg}"),
            other => panic!("expected non-finite abort, got {other:?}"),
        }
    }

    #[test]
    fn confusion_rows_sum_to_class_counts() {
        let (net, set) = toy_problem();
        let c = confusion(&net, &set, &thread_pool(1).unwrap()).unwrap();
        let rows: Vec<usize> = c.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(rows, set.class_counts());
    }

    #[test]
    fn record_csv_row() {
        let r = EpochRecord {
            epoch: 2,
            train_loss: 0.5,
            val_cost: 0.25,
            learning_rate: 0.01,
            decision: Decision::RejectAndHalve,
        };
        assert_eq!(r.to_string(), "2,0.5,0.25,0.01,reject");
    }
}
