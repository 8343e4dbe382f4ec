use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::FeatureMatrix;

/// Frames of left/right context around each center frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextWindow {
    pub left: usize,
    pub right: usize,
}

impl Default for ContextWindow {
    /// ±10 frames, 21 in total.
    fn default() -> Self {
        ContextWindow {
            left: 10,
            right: 10,
        }
    }
}

impl ContextWindow {
    pub fn size(&self) -> usize {
        self.left + self.right + 1
    }
}

/// One `dims × window × 1` tensor per input frame. Neighbours beyond the
/// utterance edges replicate the first or last frame.
pub fn stack_context(feat: &FeatureMatrix, ctx: ContextWindow) -> Result<Vec<Tensor<f64>>> {
    if feat.frames() == 0 {
        return Err(Error::Config("cannot stack context over zero frames".into()));
    }
    let padded = feat.to_tensor()?.pad_time_replicate(ctx.left, ctx.right)?;
    (0..feat.frames())
        .map(|t| padded.slice_time(t, ctx.size()))
        .collect()
}
