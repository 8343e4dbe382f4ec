use impnet::gradcheck::{gradcheck, GradcheckOptions};
use impnet::model::{load_network, preset, preset_reduced, save_network, Mode, PRESET_NAMES};
use impnet::optimizer::Parameters;
use impnet::rng::GaussianSource;
use impnet::{Network, Network32, Tensor};

fn input(net: &Network, seed: u64) -> Tensor {
    Tensor::gaussian_fill(net.input_shape(), &mut GaussianSource::new(seed, 0.0, 1.0))
}

#[test]
fn snapshot_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESET_NAMES {
        let mut c = preset(name).unwrap();
        c.seed = 17;
        let net = Network::build(&c).unwrap();
        let path = dir.path().join(name);
        save_network(&net, &path).unwrap();
        let back: Network = load_network(&path).unwrap();
        assert_eq!(back.config(), net.config());
        let bits = |n: &Network| -> Vec<u64> { n.params().iter().flat_map(|t| t.data().iter().map(|v| v.to_bits())).collect() };
        assert_eq!(bits(&back), bits(&net), "{name}");
        let x = input(&net, 3);
        assert_eq!(back.forward_trace(&x).unwrap().logits(), net.forward_trace(&x).unwrap().logits());
    }
}

#[test]
fn train_and_eval_modes_agree() {
    let mut net = Network::build(&preset("imp-toy").unwrap()).unwrap();
    let x = input(&net, 5);
    let eval = net.forward(&x, Mode::Eval).unwrap();
    let train = net.forward(&x, Mode::Train).unwrap();
    assert_eq!(eval, train);
    let cached = net.backward(2).unwrap();
    let traced = net.backward_trace(&net.forward_trace(&x).unwrap(), 2).unwrap();
    assert_eq!(cached.params, traced.params);
    assert_eq!(cached.loss, traced.loss);
}

#[test]
fn backward_needs_a_training_forward() {
    let mut net = Network::build(&preset_reduced("imp-toy").unwrap()).unwrap();
    assert!(net.backward(0).is_err());
    let x = input(&net, 1);
    net.forward(&x, Mode::Eval).unwrap();
    assert!(net.backward(0).is_err());
}

#[test]
fn same_seed_same_network() {
    let c = preset("freq-toy").unwrap();
    let a = Network::build(&c).unwrap();
    let b = Network::build(&c).unwrap();
    assert_eq!(a.params(), b.params());
    let mut other = c.clone();
    other.seed += 1;
    assert_ne!(Network::build(&other).unwrap().params(), a.params());
}

#[test]
fn single_precision_tracks_double() {
    let c = preset("imp-toy").unwrap();
    let a = Network::build(&c).unwrap();
    let b = Network32::build(&c).unwrap();
    let x = input(&a, 9);
    let sa = a.forward_trace(&x).unwrap().scores();
    let sb = b.forward_trace(&x.cast::<f32>()).unwrap().scores();
    for (p, q) in sa.iter().zip(&sb) {
        assert!((p - *q as f64).abs() < 1e-5, "{p} vs {q}");
    }
}

#[test]
fn reduced_presets_pass_gradcheck() {
    let opts = GradcheckOptions {
        trials: 5,
        ..GradcheckOptions::default()
    };
    for name in PRESET_NAMES {
        let report = gradcheck(&preset_reduced(name).unwrap(), &opts).unwrap();
        assert!(report.passed && !report.vacuous(), "{name}: {report:?}");
        assert!(report.worst_rel_err <= 1e-5, "{name}: {report:?}");
    }
}
