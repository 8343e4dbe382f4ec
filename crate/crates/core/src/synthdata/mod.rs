//! Labeled synthetic spectrogram patches with controlled frequency shifts.
//!
//! Five pattern families stand in for the spectro-temporal feature types a
//! first convolution layer tends to learn: narrow low-band harmonics, broad
//! high-band harmonics, broadband onsets, localized formant blobs and
//! formant sweeps. Every template is an analytic function of
//! `(f − shift, t)`, so a shifted pattern equals the unshifted one
//! translated by whole bins wherever both are inside the grid.

mod dataset;
mod spec;

pub use dataset::{load_split, make_dataset, write_split, Dataset, LabeledSet, SynthSample};
pub use spec::{parse_spec, SynthSpec};

use rand::Rng;

use crate::rng::GaussianSource;
use crate::tensor::{Shape, Tensor};

pub const PATCH_BINS: usize = 40;
pub const PATCH_FRAMES: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PatternKind {
    HarmonicNarrow,
    HarmonicBroad,
    OnOffset,
    FormantGabor,
    FormantSweep,
}

impl PatternKind {
    pub const ALL: [PatternKind; 5] = [
        PatternKind::HarmonicNarrow,
        PatternKind::HarmonicBroad,
        PatternKind::OnOffset,
        PatternKind::FormantGabor,
        PatternKind::FormantSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::HarmonicNarrow => "harmonic_narrow",
            PatternKind::HarmonicBroad => "harmonic_broad",
            PatternKind::OnOffset => "on_offset",
            PatternKind::FormantGabor => "formant_gabor",
            PatternKind::FormantSweep => "formant_sweep",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// One class: a pattern family with its base geometry, in bins and frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternClass {
    pub id: usize,
    pub kind: PatternKind,
    /// Lowest harmonic, band center or formant center.
    pub center: f64,
    /// Harmonic spacing, band half-width or formant spread.
    pub bandwidth: f64,
    /// Gaussian ridge width across frequency (harmonics, sweeps).
    pub width: f64,
    /// Frequency change per frame (sweeps).
    pub slope: f64,
    /// Frame at which onsets start / blobs peak.
    pub onset: f64,
}

impl PatternClass {
    pub fn canonical(id: usize, kind: PatternKind) -> Self {
        let (center, bandwidth, width, slope, onset) = match kind {
            PatternKind::HarmonicNarrow => (8.0, 4.0, 1.0, 0.0, 0.0),
            PatternKind::HarmonicBroad => (21.0, 4.0, 1.5, 0.0, 0.0),
            PatternKind::OnOffset => (20.0, 4.5, 0.0, 0.0, 10.0),
            PatternKind::FormantGabor => (20.0, 3.0, 0.0, 0.0, 10.0),
            PatternKind::FormantSweep => (20.0, 0.0, 1.5, 0.8, 10.0),
        };
        PatternClass {
            id,
            kind,
            center,
            bandwidth,
            width,
            slope,
            onset,
        }
    }

    /// Template value at bin `f` and frame `t` before shifting.
    pub fn template(&self, f: f64, t: f64) -> f64 {
        let bump = |x: f64, width: f64| (-0.5 * (x / width).powi(2)).exp();
        match self.kind {
            PatternKind::HarmonicNarrow | PatternKind::HarmonicBroad => (0..3)
                .map(|h| bump(f - self.center - h as f64 * self.bandwidth, self.width))
                .sum(),
            PatternKind::OnOffset => {
                let envelope = bump(f - self.center, self.bandwidth);
                let edge = 1.0 / (1.0 + (-(t - self.onset) * 2.0).exp());
                envelope * edge
            }
            PatternKind::FormantGabor => {
                let df = f - self.center;
                bump(df, self.bandwidth)
                    * bump(t - self.onset, 3.0)
                    * (std::f64::consts::TAU * df / 5.0).cos()
            }
            PatternKind::FormantSweep => {
                let track = self.center + self.slope * (t - self.onset);
                bump(f - track, self.width)
            }
        }
    }

    /// Frequency extent (bins) where the unshifted template exceeds ~1% of
    /// its peak.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            PatternKind::HarmonicNarrow | PatternKind::HarmonicBroad => (
                self.center - 3.0 * self.width,
                self.center + 2.0 * self.bandwidth + 3.0 * self.width,
            ),
            PatternKind::OnOffset | PatternKind::FormantGabor => (
                self.center - 3.0 * self.bandwidth,
                self.center + 3.0 * self.bandwidth,
            ),
            PatternKind::FormantSweep => {
                let reach = self.slope.abs() * (PATCH_FRAMES as f64) / 2.0 + 3.0 * self.width;
                (self.center - reach, self.center + reach)
            }
        }
    }

    /// Whether shifting by `shift` bins pushes visible energy off the grid.
    pub fn clips(&self, shift: i32) -> bool {
        let (lo, hi) = self.support();
        lo + f64::from(shift) < 0.0 || hi + f64::from(shift) > (PATCH_BINS - 1) as f64
    }
}

/// Shifted template plus i.i.d. Gaussian noise (skipped entirely when the
/// source has zero spread, so noise-free renders are exact).
pub fn render(class: &PatternClass, shift: i32, noise: &mut GaussianSource) -> SynthSample {
    if class.clips(shift) {
        log::warn!(
            "class {} ({}) shifted by {shift} bins is clipped at the grid edge",
            class.id,
            class.kind.name()
        );
    }
    let shape = Shape::new(PATCH_BINS, PATCH_FRAMES, 1).expect("fixed patch shape");
    let clean = Tensor::from_fn(shape, |f, t, _| {
        class.template(f as f64 - f64::from(shift), t as f64)
    });
    let mut tensor = clean;
    if noise.stddev() != 0.0 {
        tensor.data_mut().iter_mut().for_each(|v| *v += noise.sample());
    }
    SynthSample {
        tensor,
        label: class.id,
        shift,
    }
}

/// Noise-free rendering.
pub fn render_clean(class: &PatternClass, shift: i32) -> Tensor<f64> {
    render(class, shift, &mut GaussianSource::new(0, 0.0, 0.0)).tensor
}

pub(crate) fn draw_shift(rng: &mut impl Rng, max: u32, min_exclusive: Option<u32>) -> i32 {
    match min_exclusive {
        None => rng.gen_range(-(max as i32)..=max as i32),
        Some(lo) => {
            let magnitude = rng.gen_range(lo + 1..=max) as i32;
            if rng.gen_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        }
    }
}
