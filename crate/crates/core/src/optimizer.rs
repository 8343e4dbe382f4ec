//! SGD with momentum and L2 decay, and the per-epoch accept/reject gate.
//!
//! Update rule, applied per element:
//!
//! ```text
//! v ← μ·v − η·(g + λ·θ)
//! θ ← θ + v
//! ```
//!
//! `g` is the minibatch-mean gradient. After each epoch the gate keeps the
//! model only if the validation cost strictly decreased; otherwise the
//! parameters and velocities are restored from the last accepted snapshot
//! and the learning rate is halved.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Anything that exposes an ordered list of parameter tensors.
pub trait Parameters<S> {
    fn params(&self) -> Vec<&Tensor<S>>;
    fn params_mut(&mut self) -> Vec<&mut Tensor<S>>;
}

impl<S> Parameters<S> for Vec<Tensor<S>> {
    fn params(&self) -> Vec<&Tensor<S>> {
        self.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        self.iter_mut().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2_decay: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            l2_decay: 0.0005,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdState<S> {
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2_decay: f64,
    velocity: Vec<Tensor<S>>,
}

impl<S: Scalar> SgdState<S> {
    pub fn new(config: SgdConfig, model: &impl Parameters<S>) -> Result<Self> {
        let SgdConfig {
            learning_rate,
            momentum,
            l2_decay,
        } = config;
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {learning_rate} must be positive")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config(format!("momentum {momentum} must lie in [0, 1)")));
        }
        if !(l2_decay >= 0.0 && l2_decay.is_finite()) {
            return Err(Error::Config(format!("l2 decay {l2_decay} must be nonnegative")));
        }
        Ok(SgdState {
            learning_rate,
            momentum,
            l2_decay,
            velocity: model.params().iter().map(|p| Tensor::zeros(p.shape())).collect(),
        })
    }

    pub fn velocity(&self) -> &[Tensor<S>] {
        &self.velocity
    }

    /// One update from minibatch-mean gradients. Nothing is written if any
    /// updated value would be non-finite.
    pub fn step(&mut self, model: &mut impl Parameters<S>, grads: &[Tensor<S>]) -> Result<()> {
        let mut params = model.params_mut();
        if params.len() != grads.len() || params.len() != self.velocity.len() {
            return Err(Error::mismatch("sgd_step parameter count", params.len(), grads.len()));
        }
        for ((p, g), v) in params.iter().zip(grads).zip(&self.velocity) {
            if p.shape() != g.shape() || p.shape() != v.shape() {
                return Err(Error::mismatch("sgd_step gradient", p.shape(), g.shape()));
            }
        }
        let mu = S::of(self.momentum);
        let lr = S::of(self.learning_rate);
        let decay = S::of(self.l2_decay);
        let new_velocity: Vec<Vec<S>> = params
            .iter()
            .zip(grads)
            .zip(&self.velocity)
            .map(|((p, g), v)| {
                p.data()
                    .iter()
                    .zip(g.data())
                    .zip(v.data())
                    .map(|((&pv, &gv), &vv)| mu * vv - lr * (gv + decay * pv))
                    .collect()
            })
            .collect();
        let finite = params.iter().zip(&new_velocity).all(|(p, nv)| {
            p.data()
                .iter()
                .zip(nv)
                .all(|(&pv, &dv)| dv.is_finite() && (pv + dv).is_finite())
        });
        if !finite {
            return Err(Error::NonFinite("sgd_step".into()));
        }
        for ((p, v), nv) in params.iter_mut().zip(&mut self.velocity).zip(new_velocity) {
            for (pv, &dv) in p.data_mut().iter_mut().zip(&nv) {
                *pv += dv;
            }
            v.data_mut().copy_from_slice(&nv);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    RejectAndHalve,
}

#[derive(Debug, Clone)]
pub struct EpochGate<S> {
    best_params: Vec<Tensor<S>>,
    best_velocity: Vec<Tensor<S>>,
    best_cost: f64,
    epoch: usize,
    max_epochs: usize,
}

impl<S: Scalar> EpochGate<S> {
    pub const DEFAULT_MAX_EPOCHS: usize = 50;

    /// Snapshots the current model and velocities as the accepted state with
    /// `initial_cost` as the cost to beat (use `f64::INFINITY` to accept the
    /// first finite cost unconditionally).
    pub fn new(
        model: &impl Parameters<S>,
        state: &SgdState<S>,
        initial_cost: f64,
        max_epochs: usize,
    ) -> Self {
        EpochGate {
            best_params: model.params().into_iter().cloned().collect(),
            best_velocity: state.velocity.clone(),
            best_cost: initial_cost,
            epoch: 0,
            max_epochs,
        }
    }

    pub fn best_cost(&self) -> f64 {
        self.best_cost
    }

    pub fn best_params(&self) -> &[Tensor<S>] {
        &self.best_params
    }

    pub fn epochs_done(&self) -> usize {
        self.epoch
    }

    pub fn finished(&self) -> bool {
        self.epoch >= self.max_epochs
    }

    /// Judges one finished epoch. Accept requires a strict decrease.
    pub fn judge(
        &mut self,
        new_cost: f64,
        model: &mut impl Parameters<S>,
        state: &mut SgdState<S>,
    ) -> Result<Decision> {
        if !new_cost.is_finite() {
            return Err(Error::NonFinite("validation cost".into()));
        }
        self.epoch += 1;
        if new_cost < self.best_cost {
            self.best_cost = new_cost;
            for (snap, p) in self.best_params.iter_mut().zip(model.params()) {
                snap.clone_from(p);
            }
            self.best_velocity.clone_from(&state.velocity);
            Ok(Decision::Accept)
        } else {
            for (p, snap) in model.params_mut().into_iter().zip(&self.best_params) {
                p.clone_from(snap);
            }
            state.velocity.clone_from(&self.best_velocity);
            state.learning_rate *= 0.5;
            Ok(Decision::RejectAndHalve)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn scalar(v: f64) -> Vec<Tensor<f64>> {
        vec![Tensor::from_vec(Shape::vector(1).unwrap(), vec![v]).unwrap()]
    }

    fn sgd(lr: f64, momentum: f64, l2_decay: f64, model: &Vec<Tensor<f64>>) -> SgdState<f64> {
        SgdState::new(
            SgdConfig {
                learning_rate: lr,
                momentum,
                l2_decay,
            },
            model,
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut model = scalar(1.0);
        let mut state = sgd(0.01, 0.9, 0.0, &model);
        state.step(&mut model, &scalar(0.0)).unwrap();
        assert_eq!(model[0].data(), &[1.0]);
    }

    #[test]
    fn plain_step() {
        let mut model = scalar(0.0);
        let mut state = sgd(0.01, 0.0, 0.0, &model);
        state.step(&mut model, &scalar(1.0)).unwrap();
        assert_eq!(model[0].data(), &[-0.01]);
        assert_eq!(state.velocity()[0].data(), &[-0.01]);
    }

    #[test]
    fn momentum_recursion() {
        let mut model = scalar(0.0);
        let mut state = sgd(0.01, 0.9, 0.0, &model);
        state.step(&mut model, &scalar(1.0)).unwrap();
        state.step(&mut model, &scalar(1.0)).unwrap();
        let v = state.velocity()[0].data()[0];
        assert!((v - (-0.019)).abs() < 1e-15, "{v}");
    }

    #[test]
    fn decay_augments_gradient() {
        let mut model = scalar(2.0);
        let mut state = sgd(0.1, 0.0, 0.5, &model);
        state.step(&mut model, &scalar(0.0)).unwrap();
        assert!((model[0].data()[0] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn non_finite_update_leaves_model_untouched() {
        let mut model = scalar(1.0);
        let mut state = sgd(0.01, 0.0, 0.0, &model);
        let inf_grad = {
            let mut t = Tensor::zeros(Shape::vector(1).unwrap());
            t.data_mut()[0] = f64::INFINITY;
            vec![t]
        };
        assert!(state.step(&mut model, &inf_grad).is_err());
        assert_eq!(model[0].data(), &[1.0]);
    }

    #[test]
    fn invalid_hyperparameters() {
        let model = scalar(0.0);
        let bad = |lr, m, d| {
            SgdState::<f64>::new(
                SgdConfig {
                    learning_rate: lr,
                    momentum: m,
                    l2_decay: d,
                },
                &model,
            )
            .is_err()
        };
        assert!(bad(0.0, 0.9, 0.0));
        assert!(bad(0.01, 1.0, 0.0));
        assert!(bad(0.01, 0.9, -1.0));
    }

    #[test]
    fn gate_accepts_strict_decrease() {
        let mut model = scalar(1.0);
        let mut state = sgd(0.01, 0.9, 0.0, &model);
        let mut gate = EpochGate::new(&model, &state, 1.0, 50);
        assert_eq!(gate.judge(0.9, &mut model, &mut state).unwrap(), Decision::Accept);
        assert_eq!(gate.best_cost(), 0.9);
    }

    #[test]
    fn gate_rejects_increase_and_tie() {
        let mut model = scalar(1.0);
        let mut state = sgd(0.01, 0.9, 0.0, &model);
        let mut gate = EpochGate::new(&model, &state, 1.0, 50);
        state.step(&mut model, &scalar(3.0)).unwrap();
        assert_eq!(gate.judge(1.1, &mut model, &mut state).unwrap(), Decision::RejectAndHalve);
        assert_eq!(state.learning_rate, 0.005);
        assert_eq!(model[0].data(), &[1.0]);
        assert_eq!(state.velocity()[0].data(), &[0.0]);
        assert_eq!(gate.judge(1.0, &mut model, &mut state).unwrap(), Decision::RejectAndHalve);
        assert_eq!(gate.best_cost(), 1.0);
    }

    #[test]
    fn consecutive_rejections_halve_exactly() {
        let mut model = scalar(1.0);
        let mut state = sgd(0.01, 0.9, 0.0, &model);
        let mut gate = EpochGate::new(&model, &state, 0.5, 50);
        for n in 1..=10 {
            gate.judge(1.0, &mut model, &mut state).unwrap();
            assert_eq!(state.learning_rate, 0.01 * 2f64.powi(-n));
        }
        assert_eq!(gate.epochs_done(), 10);
    }

    #[test]
    fn gate_finishes_after_max_epochs() {
        let mut model = scalar(1.0);
        let mut state = sgd(0.01, 0.9, 0.0, &model);
        let mut gate = EpochGate::new(&model, &state, f64::INFINITY, 2);
        assert!(!gate.finished());
        gate.judge(1.0, &mut model, &mut state).unwrap();
        gate.judge(0.5, &mut model, &mut state).unwrap();
        assert!(gate.finished());
        assert!(gate.judge(f64::NAN, &mut model, &mut state).is_err());
    }
}
