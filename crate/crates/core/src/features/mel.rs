use crate::error::{Error, Result};

use super::{FeatureMatrix, PowerSpectrogram};

/// Power floor applied before the natural log.
pub const LOG_FLOOR: f64 = 1e-10;

/// `2595 · log10(1 + f / 700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters with peak weight 1, centers uniformly spaced on the
/// mel scale between 0 Hz and Nyquist. Adjacent triangles share edges, so
/// the weights at any bin sum to at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_fft: usize,
    sample_rate: u32,
    centers_hz: Vec<f64>,
    /// `n_filters × bins`, filter-major.
    weights: Vec<f64>,
}

impl MelFilterbank {
    pub fn design(sample_rate: u32, n_fft: usize, n_filters: usize) -> Result<Self> {
        if n_filters == 0 || n_fft < 2 {
            return Err(Error::Config("mel filterbank needs ≥1 filter and n_fft ≥ 2".into()));
        }
        let bins = n_fft / 2 + 1;
        let nyquist = sample_rate as f64 / 2.0;
        let top = hz_to_mel(nyquist);
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_filters + 1) as f64))
            .collect();
        let bin_hz = |b: usize| b as f64 * sample_rate as f64 / n_fft as f64;
        let mut weights = vec![0.0; n_filters * bins];
        for k in 0..n_filters {
            let (lo, mid, hi) = (edges[k], edges[k + 1], edges[k + 2]);
            let row = &mut weights[k * bins..(k + 1) * bins];
            for (b, w) in row.iter_mut().enumerate() {
                let f = bin_hz(b);
                *w = if f > lo && f <= mid {
                    (f - lo) / (mid - lo)
                } else if f > mid && f < hi {
                    (hi - f) / (hi - mid)
                } else {
                    0.0
                };
            }
            if row.iter().all(|&w| w == 0.0) {
                return Err(Error::Config(format!(
                    "{n_filters} mel filters are too many for a {n_fft}-point FFT at {sample_rate} Hz: filter {k} covers no bin"
                )));
            }
        }
        Ok(MelFilterbank {
            n_fft,
            sample_rate,
            centers_hz: edges[1..=n_filters].to_vec(),
            weights,
        })
    }

    pub fn n_filters(&self) -> usize {
        self.centers_hz.len()
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    pub fn filter(&self, k: usize) -> &[f64] {
        &self.weights[k * self.bins()..(k + 1) * self.bins()]
    }

    /// Frequency range (exclusive) over which filter `k` is nonzero.
    pub fn support_hz(&self, k: usize) -> (f64, f64) {
        let top = hz_to_mel(self.sample_rate as f64 / 2.0);
        let n = self.n_filters();
        let edge = |i: usize| mel_to_hz(top * i as f64 / (n + 1) as f64);
        (edge(k), edge(k + 2))
    }
}

/// `ln(max(Σ_b w_kb · P_b, 1e-10))` per frame and filter.
pub fn log_mel(spec: &PowerSpectrogram, bank: &MelFilterbank) -> Result<FeatureMatrix> {
    if spec.bins != bank.bins() {
        return Err(Error::mismatch("log_mel bins", bank.bins(), spec.bins));
    }
    let n = bank.n_filters();
    let mut data = Vec::with_capacity(spec.frames * n);
    for t in 0..spec.frames {
        let frame = spec.frame(t);
        for k in 0..n {
            let e: f64 = bank.filter(k).iter().zip(frame).map(|(w, p)| w * p).sum();
            data.push(e.max(LOG_FLOOR).ln());
        }
    }
    FeatureMatrix::new(n, data)
}
