use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

use super::AudioBuffer;

/// Frame geometry: 25 ms Hamming window, 10 ms hop, FFT length the next
/// power of two at or above the window length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub window: usize,
    pub hop: usize,
    pub n_fft: usize,
}

impl StftParams {
    pub fn for_rate(sample_rate: u32) -> Self {
        let window = (sample_rate as usize * 25).div_ceil(1000);
        let hop = (sample_rate as usize * 10).div_ceil(1000);
        StftParams {
            window,
            hop,
            n_fft: window.next_power_of_two(),
        }
    }

    pub fn frame_count(&self, samples: usize) -> usize {
        if samples < self.window {
            0
        } else {
            (samples - self.window) / self.hop + 1
        }
    }
}

/// Frame-major power spectrum, `n_fft / 2 + 1` bins per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrogram {
    pub frames: usize,
    pub bins: usize,
    pub n_fft: usize,
    pub sample_rate: u32,
    pub data: Vec<f64>,
}

impl PowerSpectrogram {
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.54 - 0.46 * (std::f64::consts::TAU * n as f64 / denom).cos())
        .collect()
}

pub fn stft(audio: &AudioBuffer, params: StftParams) -> Result<PowerSpectrogram> {
    let frames = params.frame_count(audio.len());
    if frames == 0 {
        return Err(Error::Audio(format!(
            "{} samples is shorter than one {}-sample window",
            audio.len(),
            params.window
        )));
    }
    let window = hamming(params.window);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(params.n_fft);
    let bins = params.n_fft / 2 + 1;
    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex::new(0.0, 0.0); params.n_fft];
    for t in 0..frames {
        let start = t * params.hop;
        let frame = &audio.samples()[start..start + params.window];
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (c, (&x, &w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            c.re = x * w;
        }
        fft.process(&mut buf);
        data.extend(buf[..bins].iter().map(|c| c.norm_sqr()));
    }
    Ok(PowerSpectrogram {
        frames,
        bins,
        n_fft: params.n_fft,
        sample_rate: audio.sample_rate(),
        data,
    })
}
