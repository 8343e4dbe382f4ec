//! Max pooling within a map (intramap) and across consecutive maps (intermap).
//!
//! Ties go to the first candidate in scan order: smallest linear index for
//! intramap blocks, smallest map index for intermap groups.

use std::sync::atomic::{AtomicBool, Ordering};

use log::warn;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Shape, Tensor};

use super::ArgIndexMap;

/// The remainder warning fires once per process, not once per sample.
static REMAINDER_WARNED: AtomicBool = AtomicBool::new(false);

/// Non-overlapping `p × q` (frequency × time) max pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntramapPoolSpec {
    pub p: usize,
    pub q: usize,
}

impl IntramapPoolSpec {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::Config(format!("intramap pool {p}×{q} must be at least 1×1")));
        }
        Ok(Self { p, q })
    }

    /// Output shape; trailing rows/columns that do not fill a whole block
    /// are dropped.
    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let (f, t) = (input.freq_bins() / self.p, input.time_steps() / self.q);
        if f == 0 || t == 0 {
            return Err(Error::mismatch(
                "intramap pool input",
                format!("at least {}×{}", self.p, self.q),
                input,
            ));
        }
        Shape::new(f, t, input.maps())
    }
}

/// Max over `r` consecutive maps, groups starting every `stride` maps.
/// `stride == r` is disjoint intermap pooling; `stride == 1` is the
/// overlapping variant with `maps − r + 1` outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntermapPoolSpec {
    pub r: usize,
    pub stride: usize,
}

impl IntermapPoolSpec {
    pub fn disjoint(r: usize) -> Result<Self> {
        Self::new(r, r)
    }

    pub fn overlapping(r: usize) -> Result<Self> {
        Self::new(r, 1)
    }

    pub fn new(r: usize, stride: usize) -> Result<Self> {
        if r == 0 || stride == 0 || stride > r {
            return Err(Error::Config(format!(
                "intermap pool needs 1 ≤ stride ≤ r (got r={r}, stride={stride})"
            )));
        }
        Ok(Self { r, stride })
    }

    pub fn is_disjoint(&self) -> bool {
        self.stride == self.r
    }

    pub fn output_maps(&self, input_maps: usize) -> Result<usize> {
        if input_maps < self.r || (input_maps - self.r) % self.stride != 0 {
            return Err(Error::Config(format!(
                "{input_maps} maps cannot be grouped by r={} with stride {}",
                self.r, self.stride
            )));
        }
        Ok((input_maps - self.r) / self.stride + 1)
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        input.with_maps(self.output_maps(input.maps())?)
    }

    /// Input maps feeding output map `k`.
    pub fn group(&self, k: usize) -> std::ops::Range<usize> {
        k * self.stride..k * self.stride + self.r
    }
}

pub fn intramap_pool_forward<S: Scalar>(
    input: &Tensor<S>,
    spec: IntramapPoolSpec,
) -> Result<(Tensor<S>, ArgIndexMap)> {
    let in_shape = input.shape();
    let out_shape = spec.output_shape(in_shape)?;
    if (in_shape.freq_bins() % spec.p != 0 || in_shape.time_steps() % spec.q != 0)
        && !REMAINDER_WARNED.swap(true, Ordering::Relaxed)
    {
        warn!(
            "intramap pool {}×{} on {in_shape}: dropping trailing remainder",
            spec.p, spec.q
        );
    }
    let mut values = Vec::with_capacity(out_shape.len());
    let mut source = Vec::with_capacity(out_shape.len());
    for m in 0..out_shape.maps() {
        for j in 0..out_shape.time_steps() {
            for i in 0..out_shape.freq_bins() {
                let mut best = in_shape.index(i * spec.p, j * spec.q, m);
                for t in j * spec.q..(j + 1) * spec.q {
                    for f in i * spec.p..(i + 1) * spec.p {
                        let idx = in_shape.index(f, t, m);
                        if input.data()[idx] > input.data()[best] {
                            best = idx;
                        }
                    }
                }
                values.push(input.data()[best]);
                source.push(best);
            }
        }
    }
    let arg = ArgIndexMap {
        input_shape: in_shape,
        output_shape: out_shape,
        source,
    };
    Ok((Tensor::from_vec(out_shape, values)?, arg))
}

pub fn intermap_pool_forward<S: Scalar>(
    input: &Tensor<S>,
    spec: IntermapPoolSpec,
) -> Result<(Tensor<S>, ArgIndexMap)> {
    if spec.is_disjoint() {
        intermap_pool_disjoint(input, spec.r)
    } else {
        intermap_pool_strided(input, spec)
    }
}

/// Disjoint groups: each map belongs to exactly one group.
pub fn intermap_pool_disjoint<S: Scalar>(
    input: &Tensor<S>,
    r: usize,
) -> Result<(Tensor<S>, ArgIndexMap)> {
    let in_shape = input.shape();
    let out_shape = IntermapPoolSpec::disjoint(r)?.output_shape(in_shape)?;
    let plane = in_shape.freq_bins() * in_shape.time_steps();
    let mut values = Vec::with_capacity(out_shape.len());
    let mut source = Vec::with_capacity(out_shape.len());
    for group in input.data().chunks_exact(plane * r) {
        let base = source.len() * r;
        for pos in 0..plane {
            let mut best = 0;
            for g in 1..r {
                if group[g * plane + pos] > group[best * plane + pos] {
                    best = g;
                }
            }
            values.push(group[best * plane + pos]);
            source.push(base + best * plane + pos);
        }
    }
    let arg = ArgIndexMap {
        input_shape: in_shape,
        output_shape: out_shape,
        source,
    };
    Ok((Tensor::from_vec(out_shape, values)?, arg))
}

/// General windows of `r` maps every `stride` maps (overlapping when
/// `stride < r`).
pub fn intermap_pool_strided<S: Scalar>(
    input: &Tensor<S>,
    spec: IntermapPoolSpec,
) -> Result<(Tensor<S>, ArgIndexMap)> {
    let in_shape = input.shape();
    let out_shape = spec.output_shape(in_shape)?;
    let mut values = Vec::with_capacity(out_shape.len());
    let mut source = Vec::with_capacity(out_shape.len());
    for k in 0..out_shape.maps() {
        let maps = spec.group(k);
        for t in 0..in_shape.time_steps() {
            for f in 0..in_shape.freq_bins() {
                let mut best = in_shape.index(f, t, maps.start);
                for m in maps.clone().skip(1) {
                    let idx = in_shape.index(f, t, m);
                    if input.data()[idx] > input.data()[best] {
                        best = idx;
                    }
                }
                values.push(input.data()[best]);
                source.push(best);
            }
        }
    }
    let arg = ArgIndexMap {
        input_shape: in_shape,
        output_shape: out_shape,
        source,
    };
    Ok((Tensor::from_vec(out_shape, values)?, arg))
}

/// Routes `upstream` to the recorded winners; contributions that land on
/// the same input position (overlapping groups) are summed.
pub fn pool_backward<S: Scalar>(arg: &ArgIndexMap, upstream: &Tensor<S>) -> Result<Tensor<S>> {
    if upstream.shape() != arg.output_shape {
        return Err(Error::mismatch("pool_backward upstream", arg.output_shape, upstream.shape()));
    }
    let mut grad = Tensor::zeros(arg.input_shape);
    let g = grad.data_mut();
    for (&src, &u) in arg.source.iter().zip(upstream.data()) {
        g[src] += u;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(f: usize, tt: usize, m: usize, v: &[f64]) -> Tensor<f64> {
        Tensor::from_vec(Shape::new(f, tt, m).unwrap(), v.to_vec()).unwrap()
    }

    #[test]
    fn pairwise_time_max() {
        let x = t(1, 6, 1, &[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]);
        let (y, _) = intramap_pool_forward(&x, IntramapPoolSpec::new(1, 2).unwrap()).unwrap();
        assert_eq!(y.data(), &[3.0, 4.0, 9.0]);
    }

    #[test]
    fn unit_pool_is_identity() {
        let x = t(2, 3, 2, &[1.0, 5.0, -2.0, 0.0, 7.0, 3.0, 2.0, 2.0, 1.0, 8.0, -1.0, 4.0]);
        let spec = IntramapPoolSpec::new(1, 1).unwrap();
        let (y, arg) = intramap_pool_forward(&x, spec).unwrap();
        assert_eq!(y, x);
        let up = t(2, 3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]);
        assert_eq!(pool_backward(&arg, &up).unwrap(), up);
    }

    #[test]
    fn block_max() {
        let x = Tensor::from_fn(Shape::new(2, 2, 1).unwrap(), |f, tt, _| [[1.0, 2.0], [8.0, 3.0]][f][tt]);
        let (y, _) = intramap_pool_forward(&x, IntramapPoolSpec::new(2, 2).unwrap()).unwrap();
        assert_eq!(y.data(), &[8.0]);
    }

    #[test]
    fn intramap_routing_and_ties() {
        let x = t(1, 4, 1, &[3.0, 1.0, 4.0, 1.0]);
        let (_, arg) = intramap_pool_forward(&x, IntramapPoolSpec::new(1, 2).unwrap()).unwrap();
        let g = pool_backward(&arg, &t(1, 2, 1, &[0.25, 0.5])).unwrap();
        assert_eq!(g.data(), &[0.25, 0.0, 0.5, 0.0]);

        let tie = t(1, 2, 1, &[7.0, 7.0]);
        let (_, arg) = intramap_pool_forward(&tie, IntramapPoolSpec::new(1, 2).unwrap()).unwrap();
        assert_eq!(pool_backward(&arg, &t(1, 1, 1, &[2.0])).unwrap().data(), &[2.0, 0.0]);
    }

    #[test]
    fn intramap_truncates_remainder() {
        let x = t(1, 5, 1, &[1.0, 2.0, 3.0, 4.0, 99.0]);
        let (y, arg) = intramap_pool_forward(&x, IntramapPoolSpec::new(1, 2).unwrap()).unwrap();
        assert_eq!(y.data(), &[2.0, 4.0]);
        let g = pool_backward(&arg, &t(1, 2, 1, &[1.0, 1.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(intramap_pool_forward(&t(1, 1, 1, &[1.0]), IntramapPoolSpec::new(1, 2).unwrap()).is_err());
    }

    #[test]
    fn intermap_disjoint_example() {
        let x = t(1, 2, 2, &[1.0, 5.0, 4.0, 2.0]);
        let (y, arg) = intermap_pool_forward(&x, IntermapPoolSpec::disjoint(2).unwrap()).unwrap();
        assert_eq!(y.data(), &[4.0, 5.0]);
        let g = pool_backward(&arg, &t(1, 2, 1, &[10.0, 20.0])).unwrap();
        // m1 gets [0, g2], m2 gets [g1, 0]
        assert_eq!(g.data(), &[0.0, 20.0, 10.0, 0.0]);
    }

    #[test]
    fn intermap_r1_is_identity() {
        let x = t(1, 2, 3, &[1.0, -5.0, 4.0, 2.0, 0.0, 3.0]);
        let (y, _) = intermap_pool_forward(&x, IntermapPoolSpec::disjoint(1).unwrap()).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn overlapping_groups_and_accumulation() {
        let (a, b, c) = (1.0, 3.0, 2.0);
        let x = t(1, 1, 3, &[a, b, c]);
        let (y, arg) = intermap_pool_forward(&x, IntermapPoolSpec::overlapping(2).unwrap()).unwrap();
        assert_eq!(y.shape().maps(), 2);
        assert_eq!(y.data(), &[3.0, 3.0]);
        let g = pool_backward(&arg, &t(1, 1, 2, &[0.5, 0.25])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.75, 0.0]);
    }

    #[test]
    fn intermap_tie_goes_to_first_map() {
        let x = t(1, 1, 2, &[4.0, 4.0]);
        let (_, arg) = intermap_pool_forward(&x, IntermapPoolSpec::disjoint(2).unwrap()).unwrap();
        assert_eq!(arg.sources(), &[0]);
        let (_, arg) = intermap_pool_strided(&x, IntermapPoolSpec::disjoint(2).unwrap()).unwrap();
        assert_eq!(arg.sources(), &[0]);
    }

    #[test]
    fn intermap_errors() {
        let x = t(1, 1, 3, &[1.0, 2.0, 3.0]);
        assert!(intermap_pool_forward(&x, IntermapPoolSpec::disjoint(2).unwrap()).is_err());
        assert!(intermap_pool_forward(&x, IntermapPoolSpec::overlapping(4).unwrap()).is_err());
        assert!(IntermapPoolSpec::new(2, 3).is_err());
        assert!(IntermapPoolSpec::new(0, 1).is_err());
        let (_, arg) = intermap_pool_forward(&x, IntermapPoolSpec::overlapping(2).unwrap()).unwrap();
        assert!(pool_backward(&arg, &t(1, 1, 1, &[1.0])).is_err());
    }
}
