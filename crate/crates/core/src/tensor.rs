//! Dense rank-3 tensors in frequency × time × maps layout.
//!
//! Linear order is frequency-fastest, then time, then map:
//! `index(f, t, m) = f + F·(t + T·m)`. A time column of one map is therefore
//! a contiguous run of `F` values.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::GaussianSource;
use crate::scalar::Scalar;

const MAX_ELEMENTS: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    freq_bins: usize,
    time_steps: usize,
    maps: usize,
}

impl Shape {
    pub fn new(freq_bins: usize, time_steps: usize, maps: usize) -> Result<Self> {
        let shape = Shape {
            freq_bins,
            time_steps,
            maps,
        };
        if freq_bins == 0 || time_steps == 0 || maps == 0 {
            return Err(Error::EmptyDimension(shape));
        }
        let len = freq_bins
            .checked_mul(time_steps)
            .and_then(|n| n.checked_mul(maps));
        match len {
            Some(n) if n <= MAX_ELEMENTS => Ok(shape),
            _ => Err(Error::DimensionOverflow(shape)),
        }
    }

    /// Column vector `n × 1 × 1`, used for dense activations.
    pub fn vector(n: usize) -> Result<Self> {
        Shape::new(n, 1, 1)
    }

    pub fn freq_bins(&self) -> usize {
        self.freq_bins
    }

    pub fn time_steps(&self) -> usize {
        self.time_steps
    }

    pub fn maps(&self) -> usize {
        self.maps
    }

    pub fn len(&self) -> usize {
        self.freq_bins * self.time_steps * self.maps
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, f: usize, t: usize, m: usize) -> usize {
        debug_assert!(f < self.freq_bins && t < self.time_steps && m < self.maps);
        f + self.freq_bins * (t + self.time_steps * m)
    }

    /// Inverse of [`Shape::index`].
    pub fn coords(&self, i: usize) -> (usize, usize, usize) {
        let f = i % self.freq_bins;
        let rest = i / self.freq_bins;
        (f, rest % self.time_steps, rest / self.time_steps)
    }

    pub fn with_maps(&self, maps: usize) -> Result<Self> {
        Shape::new(self.freq_bins, self.time_steps, maps)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}×{}×{}", self.freq_bins, self.time_steps, self.maps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<S> {
    shape: Shape,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            shape,
            data: vec![S::zero(); shape.len()],
        }
    }

    pub fn full(shape: Shape, value: S) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.len()],
        }
    }

    /// Fails on length mismatch or any non-finite entry.
    pub fn from_vec(shape: Shape, data: Vec<S>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::mismatch("Tensor::from_vec", shape.len(), data.len()));
        }
        let t = Tensor { shape, data };
        t.check_finite("Tensor::from_vec")?;
        Ok(t)
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for m in 0..shape.maps {
            for t in 0..shape.time_steps {
                for fr in 0..shape.freq_bins {
                    data.push(f(fr, t, m));
                }
            }
        }
        Tensor { shape, data }
    }

    /// I.i.d. draws in linear order from `src`.
    pub fn gaussian_fill(shape: Shape, src: &mut GaussianSource) -> Self {
        let data = (0..shape.len()).map(|_| S::of(src.sample())).collect();
        Tensor { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    #[inline]
    pub fn get(&self, f: usize, t: usize, m: usize) -> S {
        self.data[self.shape.index(f, t, m)]
    }

    #[inline]
    pub fn set(&mut self, f: usize, t: usize, m: usize, v: S) {
        let i = self.shape.index(f, t, m);
        self.data[i] = v;
    }

    /// Contiguous frequency column at time `t` of map `m`.
    #[inline]
    pub fn column(&self, t: usize, m: usize) -> &[S] {
        let start = self.shape.index(0, t, m);
        &self.data[start..start + self.shape.freq_bins]
    }

    pub fn map_plane(&self, m: usize) -> &[S] {
        let plane = self.shape.freq_bins * self.shape.time_steps;
        &self.data[m * plane..(m + 1) * plane]
    }

    /// Same data under a new shape with equal element count.
    pub fn reshape(self, shape: Shape) -> Result<Self> {
        if shape.len() != self.data.len() {
            return Err(Error::mismatch("Tensor::reshape", self.shape, shape));
        }
        Ok(Tensor {
            shape,
            data: self.data,
        })
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: S, other: &Tensor<S>) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::mismatch("Tensor::add_scaled", self.shape, other.shape));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: S) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn sum(&self) -> S {
        self.data.iter().copied().sum()
    }

    pub fn dot(&self, other: &Tensor<S>) -> S {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> S {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    /// Time sub-block `[start, start + len)` with frequency and map extents kept.
    pub fn slice_time(&self, start: usize, len: usize) -> Result<Self> {
        let t_total = self.shape.time_steps;
        if len == 0 || start.checked_add(len).is_none_or(|end| end > t_total) {
            return Err(Error::OutOfRange {
                context: "slice_time",
                detail: format!("start {start} + len {len} exceeds {t_total} time steps"),
            });
        }
        let shape = Shape::new(self.shape.freq_bins, len, self.shape.maps)?;
        let mut data = Vec::with_capacity(shape.len());
        for m in 0..self.shape.maps {
            for t in start..start + len {
                data.extend_from_slice(self.column(t, m));
            }
        }
        Ok(Tensor { shape, data })
    }

    /// Extends the time axis by copying the first frame `left` times and the
    /// last frame `right` times.
    pub fn pad_time_replicate(&self, left: usize, right: usize) -> Result<Self> {
        let t_in = self.shape.time_steps;
        let shape = Shape::new(self.shape.freq_bins, t_in + left + right, self.shape.maps)?;
        let mut data = Vec::with_capacity(shape.len());
        for m in 0..self.shape.maps {
            for t in 0..shape.time_steps {
                let src = t.saturating_sub(left).min(t_in - 1);
                data.extend_from_slice(self.column(src, m));
            }
        }
        Ok(Tensor { shape, data })
    }

    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|v| T::of(v.as_f64())).collect(),
        }
    }
}
