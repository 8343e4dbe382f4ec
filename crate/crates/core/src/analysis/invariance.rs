use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Network;
use crate::scalar::Scalar;
use crate::synthdata::{render_clean, PatternClass};
use crate::tensor::Tensor;

use super::imp_front;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftDistance {
    pub shift: u32,
    /// Mean relative distance at the first convolution's output.
    pub pre: f64,
    /// Mean relative distance after intermap pooling.
    pub post: f64,
    /// `post / pre`, or 1 when `pre` is 0.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub rows: Vec<ShiftDistance>,
}

impl InvarianceReport {
    /// Mean ratio over shifts `lo..=hi`.
    pub fn mean_ratio(&self, lo: u32, hi: u32) -> Option<f64> {
        let r: Vec<f64> = self
            .rows
            .iter()
            .filter(|d| (lo..=hi).contains(&d.shift))
            .map(|d| d.ratio)
            .collect();
        (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
    }
}

/// `‖a − b‖ / ‖a‖`, 0 when both are zero.
pub fn relative_distance<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> f64 {
    let (mut diff, mut norm) = (0.0, 0.0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x.as_f64(), y.as_f64());
        diff += (x - y) * (x - y);
        norm += x * x;
    }
    if diff == 0.0 {
        0.0
    } else if norm == 0.0 {
        f64::INFINITY
    } else {
        (diff / norm).sqrt()
    }
}

/// Relative distances between two inputs at the pre- and post-pooling taps
/// (outputs of the first and second layer).
pub fn tap_distances<S: Scalar>(net: &Network<S>, reference: &Tensor<S>, other: &Tensor<S>) -> Result<(f64, f64)> {
    imp_front(net)?;
    let (a, b) = (net.forward_trace(reference)?, net.forward_trace(other)?);
    Ok((
        relative_distance(a.layer_output(0), b.layer_output(0)),
        relative_distance(a.layer_output(1), b.layer_output(1)),
    ))
}

/// Distances between every class template and its copies shifted by
/// `±1..=±max_shift` bins, averaged over classes and both directions.
/// Row 0 (no shift) is included as a reference.
pub fn shift_invariance<S: Scalar>(
    net: &Network<S>,
    classes: &[PatternClass],
    max_shift: u32,
) -> Result<InvarianceReport> {
    imp_front(net)?;
    if classes.is_empty() {
        return Err(Error::Config("shift invariance needs at least one class".into()));
    }
    let mut rows = Vec::new();
    for s in 0..=max_shift {
        let (mut pre, mut post, mut n) = (0.0, 0.0, 0.0);
        for class in classes {
            let base = render_clean(class, 0).cast::<S>();
            for sign in [1, -1] {
                let shifted = render_clean(class, sign * s as i32).cast::<S>();
                let (a, b) = tap_distances(net, &base, &shifted)?;
                pre += a;
                post += b;
                n += 1.0;
            }
        }
        let (pre, post) = (pre / n, post / n);
        rows.push(ShiftDistance {
            shift: s,
            pre,
            post,
            ratio: if pre == 0.0 { 1.0 } else { post / pre },
        });
    }
    Ok(InvarianceReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::Activation;
    use crate::model::{preset, Layer, LayerKind, LayerSpec, NetworkConfig};
    use crate::optimizer::Parameters;
    use crate::synthdata::SynthSpec;
    use crate::tensor::Shape;

    fn with_r(r: usize) -> Network<f64> {
        let mut c = preset("imp-toy").unwrap();
        c.layers[1] = LayerSpec::intermap(r, r).unwrap();
        c.weight_stddev = 0.05;
        Network::build(&c).unwrap()
    }

    #[test]
    fn zero_shift_and_unit_groups() {
        let classes = SynthSpec::default().classes;
        let rep = shift_invariance(&with_r(1), &classes, 2).unwrap();
        assert_eq!(rep.rows[0].pre, 0.0);
        assert_eq!(rep.rows[0].post, 0.0);
        assert!(rep.rows.iter().all(|d| d.ratio == 1.0));
        assert!(rep.rows[1].pre > 0.0);
        let rep4 = shift_invariance(&with_r(4), &classes, 2).unwrap();
        assert_eq!(rep4.rows[0].post, 0.0);
    }

    #[test]
    fn group_max_absorbs_within_group_variation() {
        // two filters picking bin 0 and bin 1; a shift by one bin swaps
        // their responses, which the group max cannot see
        let mut c = NetworkConfig::new(vec![
            LayerSpec::new(LayerKind::ConvTime {
                height: None,
                width: 1,
                maps: 2,
                activation: Activation::Identity,
            }),
            LayerSpec::intermap(2, 2).unwrap(),
            LayerSpec::softmax(2),
        ]);
        c.input = Shape::new(2, 1, 1).unwrap();
        let mut net = Network::<f64>::build(&c).unwrap();
        {
            let mut params = net.params_mut();
            params[0].data_mut().copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
            params[1].data_mut().copy_from_slice(&[0.0, 0.0]);
        }
        assert!(matches!(net.layers()[1], Layer::IntermapPool(_)));
        let a = Tensor::from_vec(Shape::new(2, 1, 1).unwrap(), vec![1.0, 0.0]).unwrap();
        let b = Tensor::from_vec(Shape::new(2, 1, 1).unwrap(), vec![0.0, 1.0]).unwrap();
        let (pre, post) = tap_distances(&net, &a, &b).unwrap();
        assert!(pre > 0.0);
        assert_eq!(post, 0.0);
    }

    #[test]
    fn non_imp_nets_are_rejected() {
        let net = Network::<f64>::build(&preset("cnn-toy-6L").unwrap()).unwrap();
        assert!(shift_invariance(&net, &SynthSpec::default().classes, 1).is_err());
    }
}
