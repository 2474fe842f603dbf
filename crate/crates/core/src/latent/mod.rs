//! Latent-space conditioning: pseudo and edit videos, mask downsampling, the
//! masked blend of source and edit latents, the zeroing rule and the
//! denoising-step schedule.
//!
//! Latent layout is `(1 + T/4, H/8, W/8, C)`. Latent frame 0 stands for video
//! frame 0 alone; latent frame `k ≥ 1` covers video frames `4k − 3 ..= 4k`.

mod bundle;
mod encoder;

pub use bundle::{export_bundle, load_bundle, BundleFile, BundleInputs, BundleManifest, LoadedBundle, Prompts};
pub use encoder::{channel_lift_matrix, LatentEncoder, ReferenceEncoder, LATENT_CHANNELS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::IoError;
use crate::motion::DisocclusionMask;
use crate::raster::Image;
use crate::tensor::{Tensor4, TensorError};

/// Video frames per latent frame (after the first).
pub const TEMPORAL_FACTOR: usize = 4;
/// Pixels per latent cell along each spatial axis.
pub const SPATIAL_FACTOR: usize = 8;
/// Default total denoising steps.
pub const DEFAULT_STEPS: usize = 50;
/// Default number of leading steps that use the composite latent.
pub const DEFAULT_REPLACE: usize = 35;

#[derive(Debug, Error)]
pub enum LatentError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{what} = {value} is not divisible by {divisor}")]
    Indivisible {
        what: &'static str,
        value: usize,
        divisor: usize,
    },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    Shape { left: [usize; 4], right: [usize; 4] },
    #[error("step n = {n} invalid for N = {steps}, M = {replace} (need 1 <= n <= N, M <= N)")]
    Schedule { n: usize, steps: usize, replace: usize },
    #[error("{what}: {detail}")]
    Dimension { what: String, detail: String },
    #[error("checksum mismatch for {file}")]
    Checksum { file: String },
    #[error("bundle manifest: {0}")]
    Manifest(String),
    #[error("latent contains non-finite values")]
    NonFinite,
}

impl LatentError {
    pub fn is_io(&self) -> bool {
        match self {
            LatentError::Io(_) => true,
            LatentError::Tensor(e) => e.is_io(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Source,
    Edit,
    Composite,
}

/// A `(1 + T/4, H/8, W/8, C)` latent with a provenance tag.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor {
    data: Tensor4,
    provenance: Provenance,
}

impl LatentTensor {
    pub fn new(data: Tensor4, provenance: Provenance) -> Result<Self, LatentError> {
        if data.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(LatentError::NonFinite);
        }
        Ok(Self { data, provenance })
    }

    pub fn data(&self) -> &Tensor4 {
        &self.data
    }

    pub fn into_data(self) -> Tensor4 {
        self.data
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn dims(&self) -> [usize; 4] {
        self.data.dims()
    }
}

/// Binary `(1 + T/4, H/8, W/8, 1)` mask. Latent frame 0 is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMask {
    data: Tensor4,
}

impl LatentMask {
    pub fn data(&self) -> &Tensor4 {
        &self.data
    }

    pub fn dims(&self) -> [usize; 4] {
        self.data.dims()
    }

    /// Wraps a tensor, checking binarity and the frame-0 invariant.
    pub fn from_tensor(data: Tensor4) -> Result<Self, LatentError> {
        let [f, h, w, c] = data.dims();
        if c != 1 || f == 0 {
            return Err(LatentError::Shape {
                left: data.dims(),
                right: [f, h, w, 1],
            });
        }
        if data.as_slice().iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(LatentError::Dimension {
                what: "latent mask".into(),
                detail: "values must be 0 or 1".into(),
            });
        }
        if data.frame(0).iter().any(|&v| v != 0.0) {
            return Err(LatentError::Dimension {
                what: "latent mask".into(),
                detail: "frame 0 must be empty".into(),
            });
        }
        Ok(Self { data })
    }

    #[inline]
    fn is_set(&self, frame: usize, row: usize, col: usize) -> bool {
        self.data.at(frame, row, col, 0) != 0.0
    }
}

/// Latent frame count for `frames = 1 + T` video frames.
pub fn latent_frames(frames: usize) -> Result<usize, LatentError> {
    let t = frames.checked_sub(1).filter(|&t| t > 0).ok_or(LatentError::Indivisible {
        what: "T",
        value: 0,
        divisor: TEMPORAL_FACTOR,
    })?;
    if t % TEMPORAL_FACTOR != 0 {
        return Err(LatentError::Indivisible {
            what: "T",
            value: t,
            divisor: TEMPORAL_FACTOR,
        });
    }
    Ok(1 + t / TEMPORAL_FACTOR)
}

pub(crate) fn check_spatial(height: usize, width: usize) -> Result<(), LatentError> {
    for (what, value) in [("H", height), ("W", width)] {
        if value == 0 || value % SPATIAL_FACTOR != 0 {
            return Err(LatentError::Indivisible {
                what,
                value,
                divisor: SPATIAL_FACTOR,
            });
        }
    }
    Ok(())
}

/// Video frames pooled into latent frame `k`.
pub fn latent_frame_span(k: usize) -> std::ops::RangeInclusive<usize> {
    if k == 0 {
        0..=0
    } else {
        (TEMPORAL_FACTOR * k - (TEMPORAL_FACTOR - 1))..=(TEMPORAL_FACTOR * k)
    }
}

fn image_tensor_frames(images: impl Iterator<Item = Option<Image>>, frames: usize, h: usize, w: usize) -> Tensor4 {
    let mut t = Tensor4::zeros([frames, h, w, 3]);
    for (i, img) in images.enumerate() {
        if let Some(img) = img {
            let dst = t.frame_mut(i);
            for (k, px) in img.as_slice().iter().enumerate() {
                dst[3 * k] = px[0] as f32;
                dst[3 * k + 1] = px[1] as f32;
                dst[3 * k + 2] = px[2] as f32;
            }
        }
    }
    t
}

/// `(1 + T, H, W, 3)` video with the image at frame 0 and zeros after it.
pub fn build_pseudo_video(image: &Image, frames_after: usize) -> Tensor4 {
    let (h, w) = image.dims();
    let images = std::iter::once(Some(image.clone()));
    image_tensor_frames(images, frames_after + 1, h, w)
}

/// `(1 + T, H, W, 3)` video with the edited frame replicated into every frame,
/// frame 0 included.
pub fn build_edit_video(
    edited: &Image,
    frames_after: usize,
    expected: (usize, usize),
) -> Result<Tensor4, LatentError> {
    if edited.dims() != expected {
        return Err(LatentError::Dimension {
            what: "edited frame".into(),
            detail: format!("is {:?}, expected {:?}", edited.dims(), expected),
        });
    }
    let (h, w) = expected;
    let n = frames_after + 1;
    Ok(image_tensor_frames(
        std::iter::repeat_with(|| Some(edited.clone())).take(n),
        n,
        h,
        w,
    ))
}

/// Max-pools the disocclusion volume into latent cells: a cell is set iff
/// any pixel of any video frame it covers is set.
pub fn downsample_mask(mask: &DisocclusionMask) -> Result<LatentMask, LatentError> {
    let (h, w) = mask.dims();
    let lf = latent_frames(mask.frame_count())?;
    check_spatial(h, w)?;
    if mask.frames[0].any() {
        return Err(LatentError::Dimension {
            what: "disocclusion mask".into(),
            detail: "frame 0 must be empty".into(),
        });
    }
    let (lh, lw) = (h / SPATIAL_FACTOR, w / SPATIAL_FACTOR);
    let mut out = Tensor4::zeros([lf, lh, lw, 1]);
    for k in 1..lf {
        for t in latent_frame_span(k) {
            for (r, c) in mask.frames[t].set_pixels() {
                *out.at_mut(k, r / SPATIAL_FACTOR, c / SPATIAL_FACTOR, 0) = 1.0;
            }
        }
    }
    Ok(LatentMask { data: out })
}

fn check_mask_shape(latent: &Tensor4, mask: &LatentMask) -> Result<(), LatentError> {
    let [f, h, w, _] = latent.dims();
    let [mf, mh, mw, _] = mask.dims();
    if (f, h, w) != (mf, mh, mw) {
        return Err(LatentError::Shape {
            left: latent.dims(),
            right: mask.dims(),
        });
    }
    Ok(())
}

/// `M′·F_edit + (1 − M′)·F_s` with the mask broadcast over channels. For a
/// binary mask every cell is copied bit-exactly from the selected source.
pub fn composite(
    source: &LatentTensor,
    edit: &LatentTensor,
    mask: &LatentMask,
) -> Result<LatentTensor, LatentError> {
    if source.dims() != edit.dims() {
        return Err(LatentError::Shape {
            left: source.dims(),
            right: edit.dims(),
        });
    }
    check_mask_shape(&source.data, mask)?;
    let [f, h, w, c] = source.dims();
    let (s, e) = (source.data.as_slice(), edit.data.as_slice());
    let mut out = Vec::with_capacity(s.len());
    for i in 0..f {
        for r in 0..h {
            for col in 0..w {
                let base = ((i * h + r) * w + col) * c;
                let pick = if mask.is_set(i, r, col) { e } else { s };
                out.extend_from_slice(&pick[base..base + c]);
            }
        }
    }
    Ok(LatentTensor {
        data: Tensor4::from_vec(source.dims(), out)?,
        provenance: Provenance::Composite,
    })
}

/// Zeroes every channel of latent frames `≥ 1` where the mask is unset.
/// Frame 0 is untouched.
pub fn apply_zero_rule(latent: &LatentTensor, mask: &LatentMask) -> Result<LatentTensor, LatentError> {
    check_mask_shape(&latent.data, mask)?;
    let [f, h, w, c] = latent.dims();
    let mut data = latent.data.clone();
    for i in 1..f {
        for r in 0..h {
            for col in 0..w {
                if !mask.is_set(i, r, col) {
                    let base = data.index(i, r, col, 0);
                    data.as_mut_slice()[base..base + c].fill(0.0);
                }
            }
        }
    }
    Ok(LatentTensor {
        data,
        provenance: latent.provenance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleOutcome {
    UseComposite,
    UseSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleDecision {
    pub step: usize,
    pub steps: usize,
    pub replace: usize,
    pub outcome: ScheduleOutcome,
}

/// Which image latent the denoiser sees at step `n` (counting down from `N`
/// to 1): the composite for the first `M` steps, i.e. iff `n > N − M`.
pub fn schedule_conditioning(n: usize, steps: usize, replace: usize) -> Result<ScheduleDecision, LatentError> {
    if n < 1 || n > steps || replace > steps {
        return Err(LatentError::Schedule {
            n,
            steps,
            replace,
        });
    }
    let outcome = if n > steps - replace {
        ScheduleOutcome::UseComposite
    } else {
        ScheduleOutcome::UseSource
    };
    Ok(ScheduleDecision {
        step: n,
        steps,
        replace,
        outcome,
    })
}
