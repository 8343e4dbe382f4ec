//! Acoustic front-end: PCM16 WAV → STFT power → 40-band log-mel → stacked
//! context windows.
//!
//! The pipeline is deliberately minimal: no pre-emphasis, no dithering, no
//! energy coefficient, and mean normalization only when asked for.

mod context;
mod mel;
mod stft;
mod wav;

pub use context::{stack_context, ContextWindow};
pub use mel::{hz_to_mel, log_mel, mel_to_hz, MelFilterbank, LOG_FLOOR};
pub use stft::{stft, PowerSpectrogram, StftParams};
pub use wav::{read_wav, write_wav, AudioBuffer};

use crate::error::{Error, Result};
use crate::tensor::{Shape, Tensor};

pub const DEFAULT_MEL_BANDS: usize = 40;

/// Time-major sequence of feature vectors (dimension fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dims: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dims: usize, data: Vec<f64>) -> Result<Self> {
        if dims == 0 || data.len() % dims != 0 {
            return Err(Error::format(
                "feature matrix",
                format!("{} values do not form whole {dims}-dim frames", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(FeatureMatrix { dims, data })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn frames(&self) -> usize {
        self.data.len() / self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.dims..(t + 1) * self.dims]
    }

    pub fn iter_frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dims)
    }

    /// `dims × frames × 1` tensor; the linear orders coincide.
    pub fn to_tensor(&self) -> Result<Tensor<f64>> {
        Tensor::from_vec(Shape::new(self.dims, self.frames(), 1)?, self.data.clone())
    }

    pub fn from_tensor(t: &Tensor<f64>) -> Result<Self> {
        let s = t.shape();
        if s.maps() != 1 {
            return Err(Error::mismatch("feature tensor maps", 1, s.maps()));
        }
        FeatureMatrix::new(s.freq_bins(), t.data().to_vec())
    }

    /// Subtracts the per-dimension mean over all frames.
    pub fn mean_normalize(&mut self) {
        let frames = self.frames();
        if frames == 0 {
            return;
        }
        let mut mean = vec![0.0; self.dims];
        for frame in self.data.chunks_exact(self.dims) {
            for (m, v) in mean.iter_mut().zip(frame) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= frames as f64);
        for frame in self.data.chunks_exact_mut(self.dims) {
            for (v, m) in frame.iter_mut().zip(&mean) {
                *v -= m;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEnd {
    pub mel_bands: usize,
    pub mean_norm: bool,
}

impl Default for FrontEnd {
    fn default() -> Self {
        FrontEnd {
            mel_bands: DEFAULT_MEL_BANDS,
            mean_norm: false,
        }
    }
}

impl FrontEnd {
    /// Audio to log-mel features.
    pub fn extract(&self, audio: &AudioBuffer) -> Result<FeatureMatrix> {
        let params = StftParams::for_rate(audio.sample_rate());
        let spec = stft(audio, params)?;
        let bank = MelFilterbank::design(audio.sample_rate(), params.n_fft, self.mel_bands)?;
        let mut feat = log_mel(&spec, &bank)?;
        if self.mean_norm {
            feat.mean_normalize();
        }
        Ok(feat)
    }
}
