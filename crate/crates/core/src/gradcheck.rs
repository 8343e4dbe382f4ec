//! Central-difference verification of a network's analytic gradients.
//!
//! Parameters are re-drawn with fan-in scaled weights first: at the small
//! default init the deep gradients sit far below the finite-difference noise
//! floor and every comparison would pass trivially. Perturbations that flip
//! a ReLU or change a pooling winner are skipped, since the loss is not
//! differentiable there.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Network, NetworkConfig};
use crate::optimizer::Parameters;
use crate::rng::{derive_seed, seeded_rng, GaussianSource};
use crate::tensor::Tensor;

/// Largest network the checker accepts.
pub const MAX_PARAMS: usize = 50_000;
/// Denominator floor of the relative error.
pub const REL_FLOOR: f64 = 1e-4;
/// Coordinates sampled per tensor per trial when the tensor is larger.
const COORDS_PER_TENSOR: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckOptions {
    pub trials: usize,
    pub eps: f64,
    pub tol: f64,
    pub seed: u64,
    /// Corrupts the analytic gradients; for testing the harness itself.
    pub inject_bug: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        GradcheckOptions {
            trials: 20,
            eps: 1e-5,
            tol: 1e-5,
            seed: 0,
            inject_bug: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub checked: usize,
    pub skipped_kinks: usize,
    pub worst_rel_err: f64,
    /// `param_name[index]` or `input[index]` of the worst comparison.
    pub worst_site: String,
    pub passed: bool,
}

impl GradcheckReport {
    pub fn vacuous(&self) -> bool {
        self.checked == 0
    }

    fn record(&mut self, analytic: f64, numeric: Option<f64>, site: impl FnOnce() -> String) {
        let Some(n) = numeric else {
            self.skipped_kinks += 1;
            return;
        };
        self.checked += 1;
        let e = relative_error(analytic, n);
        if e > self.worst_rel_err || self.worst_site.is_empty() {
            self.worst_rel_err = e;
            self.worst_site = site();
        }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Config with `N(0, 1/fan_in)` weights and `N(0, 0.1²)` biases.
pub fn well_conditioned(config: &NetworkConfig) -> Result<NetworkConfig> {
    config.fan_in_scaled(1.0, 0.1)
}

struct Probe<'a> {
    net: &'a mut Network<f64>,
    input: Tensor<f64>,
    label: usize,
    signature: Vec<usize>,
    eps: f64,
}

impl Probe<'_> {
    /// Loss at the current state, or `None` if the branch pattern moved.
    fn loss_if_smooth(&self) -> Result<Option<f64>> {
        let trace = self.net.forward_trace(&self.input)?;
        if trace.signature(self.net) != self.signature {
            return Ok(None);
        }
        Ok(Some(self.net.backward_trace(&trace, self.label)?.loss))
    }

    fn param_derivative(&mut self, p: usize, i: usize) -> Result<Option<f64>> {
        let original = self.net.params()[p].data()[i];
        self.net.params_mut()[p].data_mut()[i] = original + self.eps;
        let plus = self.loss_if_smooth()?;
        self.net.params_mut()[p].data_mut()[i] = original - self.eps;
        let minus = self.loss_if_smooth()?;
        self.net.params_mut()[p].data_mut()[i] = original;
        Ok(plus.zip(minus).map(|(a, b)| (a - b) / (2.0 * self.eps)))
    }

    fn input_derivative(&mut self, i: usize) -> Result<Option<f64>> {
        let original = self.input.data()[i];
        self.input.data_mut()[i] = original + self.eps;
        let plus = self.loss_if_smooth()?;
        self.input.data_mut()[i] = original - self.eps;
        let minus = self.loss_if_smooth()?;
        self.input.data_mut()[i] = original;
        Ok(plus.zip(minus).map(|(a, b)| (a - b) / (2.0 * self.eps)))
    }
}

fn sample_coords(len: usize, rng: &mut impl Rng) -> Vec<usize> {
    if len <= COORDS_PER_TENSOR {
        (0..len).collect()
    } else {
        (0..COORDS_PER_TENSOR).map(|_| rng.gen_range(0..len)).collect()
    }
}

pub fn gradcheck(config: &NetworkConfig, opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let params = config.param_count()?;
    if params > MAX_PARAMS {
        return Err(Error::Config(format!(
            "network has {params} parameters; gradient checking is capped at {MAX_PARAMS}"
        )));
    }
    if !(opts.eps > 0.0 && opts.tol > 0.0) {
        return Err(Error::Config("eps and tol must be positive".into()));
    }
    if opts.trials == 0 {
        log::warn!("gradcheck with zero trials checks nothing");
    }
    let mut net = Network::<f64>::build(&well_conditioned(config)?)?;
    net.set_validation(true);
    let names = net.param_names();
    let classes = net.classes();
    let mut report = GradcheckReport {
        checked: 0,
        skipped_kinks: 0,
        worst_rel_err: 0.0,
        worst_site: String::new(),
        passed: true,
    };
    for trial in 0..opts.trials {
        let trial_seed = derive_seed(opts.seed, trial as u64);
        let mut rng = seeded_rng(trial_seed);
        let input = Tensor::gaussian_fill(net.input_shape(), &mut GaussianSource::new(derive_seed(trial_seed, 1), 0.0, 1.0));
        let label = rng.gen_range(0..classes);
        let trace = net.forward_trace(&input)?;
        let mut grads = net.backward_trace(&trace, label)?;
        if opts.inject_bug {
            for g in grads.params.iter_mut() {
                g.data_mut().iter_mut().for_each(|v| *v = *v * 1.5 + 1e-3);
            }
        }
        let signature = trace.signature(&net);
        let mut probe = Probe {
            net: &mut net,
            input,
            label,
            signature,
            eps: opts.eps,
        };
        for (p, g) in grads.params.iter().enumerate() {
            for i in sample_coords(g.len(), &mut rng) {
                let numeric = probe.param_derivative(p, i)?;
                report.record(g.data()[i], numeric, || format!("{}[{i}]", names[p]));
            }
        }
        for i in sample_coords(grads.input.len(), &mut rng) {
            let numeric = probe.input_derivative(i)?;
            report.record(grads.input.data()[i], numeric, || format!("input[{i}]"));
        }
    }
    report.passed = report.worst_rel_err <= opts.tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset_reduced;

    #[test]
    fn reduced_presets_pass() {
        for name in crate::model::PRESET_NAMES {
            let r = gradcheck(&preset_reduced(name).unwrap(), &GradcheckOptions { trials: 3, ..Default::default() }).unwrap();
            assert!(r.passed, "{name}: {r:?}");
            assert!(r.checked > 100, "{name}: {r:?}");
        }
    }

    #[test]
    fn injected_bug_is_caught() {
        let opts = GradcheckOptions {
            trials: 2,
            inject_bug: true,
            ..Default::default()
        };
        let r = gradcheck(&preset_reduced("imp-toy").unwrap(), &opts).unwrap();
        assert!(!r.passed);
        assert!(r.worst_rel_err > 0.1);
    }

    #[test]
    fn zero_trials_is_vacuous() {
        let opts = GradcheckOptions {
            trials: 0,
            ..Default::default()
        };
        let r = gradcheck(&preset_reduced("imp-toy").unwrap(), &opts).unwrap();
        assert!(r.passed && r.vacuous());
    }

    #[test]
    fn size_cap() {
        let mut c = crate::model::preset("imp-toy").unwrap();
        let n = c.layers.len();
        c.layers[n - 2] = crate::model::LayerSpec::dense(5000);
        assert!(matches!(gradcheck(&c, &GradcheckOptions::default()), Err(Error::Config(_))));
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(1.0, 1.0), 0.0);
        assert!((relative_error(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((relative_error(1e-9, 0.0) - 1e-5).abs() < 1e-18);
    }
}
