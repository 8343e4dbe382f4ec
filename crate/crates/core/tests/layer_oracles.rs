//! Layer kernels against direct loop implementations.

use impnet::layers::{
    conv_backward, conv_forward, intermap_pool_forward, intramap_pool_forward, pool_backward, Activation,
    IntermapPoolSpec, IntramapPoolSpec,
};
use impnet::{ConvLayer, Shape, Tensor};
use proptest::prelude::*;

fn tensor(f: usize, t: usize, m: usize, values: &[f64]) -> Tensor {
    let s = Shape::new(f, t, m).unwrap();
    Tensor::from_vec(s, values.iter().cycle().take(s.len()).copied().collect()).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 1..64)
}

fn naive_conv(x: &Tensor, l: &ConvLayer) -> Tensor {
    let (h, w, g_in) = (l.height(), l.width(), l.in_maps());
    let s = x.shape();
    let out = Shape::new(s.freq_bins() - h + 1, s.time_steps() - w + 1, l.out_maps()).unwrap();
    Tensor::from_fn(out, |i, j, k| {
        let mut acc = l.bias().data()[k];
        for m in 0..h {
            for n in 0..w {
                for g in 0..g_in {
                    acc += l.weights().get(m, n, k * g_in + g) * x.get(i + m, j + n, g);
                }
            }
        }
        l.activation().apply(acc)
    })
}

fn close(a: &Tensor, b: &Tensor, tol: f64) -> bool {
    a.shape() == b.shape() && a.data().iter().zip(b.data()).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #[test]
    fn conv_matches_loops(
        (f, t, h, w) in (1usize..6, 1usize..7).prop_flat_map(|(f, t)| (Just(f), Just(t), 1..=f, 1..=t)),
        g_in in 1usize..3,
        g_out in 1usize..4,
        relu in any::<bool>(),
        xs in values(),
        ws in values(),
    ) {
        let act = if relu { Activation::Relu } else { Activation::Identity };
        let layer = ConvLayer::new(tensor(h, w, g_in * g_out, &ws), tensor(g_out, 1, 1, &xs), g_in, act).unwrap();
        let x = tensor(f, t, g_in, &xs);
        prop_assert!(close(&conv_forward(&x, &layer).unwrap(), &naive_conv(&x, &layer), 1e-12));
    }

    #[test]
    fn intramap_pool_matches_loops(p in 1usize..4, q in 1usize..4, bf in 1usize..4, bt in 1usize..4, extra in 0usize..2, m in 1usize..3, xs in values()) {
        let x = tensor(p * bf + extra, q * bt, m, &xs);
        let (y, _) = intramap_pool_forward(&x, IntramapPoolSpec::new(p, q).unwrap()).unwrap();
        let expect = Tensor::from_fn(Shape::new((p * bf + extra) / p, bt, m).unwrap(), |i, j, k| {
            let mut best = f64::NEG_INFINITY;
            for a in 0..p {
                for b in 0..q {
                    best = best.max(x.get(i * p + a, j * q + b, k));
                }
            }
            best
        });
        prop_assert_eq!(y, expect);
    }

    #[test]
    fn intermap_pool_matches_loops(r in 1usize..5, groups in 1usize..4, overlap in any::<bool>(), f in 1usize..4, t in 1usize..4, xs in values()) {
        let stride = if overlap { 1 } else { r };
        let x = tensor(f, t, r * groups, &xs);
        let (y, _) = intermap_pool_forward(&x, IntermapPoolSpec::new(r, stride).unwrap()).unwrap();
        let maps = (r * groups - r) / stride + 1;
        let expect = Tensor::from_fn(Shape::new(f, t, maps).unwrap(), |i, j, k| {
            (0..r).map(|g| x.get(i, j, k * stride + g)).fold(f64::NEG_INFINITY, f64::max)
        });
        prop_assert_eq!(y, expect);
    }

    /// Pooling backward delivers each upstream value to exactly the input
    /// cell that won the max.
    #[test]
    fn pool_gradient_goes_to_the_winner(r in 1usize..4, groups in 1usize..4, f in 1usize..3, t in 1usize..3, xs in values(), us in values()) {
        let x = tensor(f, t, r * groups, &xs);
        let (y, arg) = intermap_pool_forward(&x, IntermapPoolSpec::disjoint(r).unwrap()).unwrap();
        let up = tensor(f, t, groups, &us);
        let dx = pool_backward(&arg, &up).unwrap();
        prop_assert!((dx.sum() - up.sum()).abs() < 1e-12);
        for (o, &src) in arg.sources().iter().enumerate() {
            prop_assert_eq!(x.data()[src], y.data()[o]);
        }
    }

    #[test]
    fn conv_gradients_match_differences(
        f in 2usize..5, t in 2usize..5, g_out in 1usize..3, xs in values(), ws in values(), us in values(),
    ) {
        let layer = ConvLayer::new(tensor(2, 2, g_out, &ws), tensor(g_out, 1, 1, &us), 1, Activation::Identity).unwrap();
        let x = tensor(f, t, 1, &xs);
        let up = tensor(f - 1, t - 1, g_out, &us);
        let g = conv_backward(&x, &layer, &up).unwrap();
        // identity activation: the objective <up, conv(x)> is linear, so
        // central differences are exact up to rounding
        let objective = |x: &Tensor, l: &ConvLayer| conv_forward(x, l).unwrap().dot(&up);
        let h = 1e-3;
        for i in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a.data_mut()[i] += h;
            b.data_mut()[i] -= h;
            let numeric = (objective(&a, &layer) - objective(&b, &layer)) / (2.0 * h);
            prop_assert!((numeric - g.input.data()[i]).abs() < 1e-8);
        }
        for i in 0..layer.weights().len() {
            let (mut a, mut b) = (layer.clone(), layer.clone());
            a.weights_mut().data_mut()[i] += h;
            b.weights_mut().data_mut()[i] -= h;
            let numeric = (objective(&x, &a) - objective(&x, &b)) / (2.0 * h);
            prop_assert!((numeric - g.params[0].data()[i]).abs() < 1e-8);
        }
    }
}
