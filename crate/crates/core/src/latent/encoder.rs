use super::{check_spatial, latent_frame_span, latent_frames, LatentError, SPATIAL_FACTOR};
use crate::tensor::Tensor4;

pub const LATENT_CHANNELS: usize = 16;

/// Maps a `(1 + T, H, W, 3)` video to a `(1 + T/4, H/8, W/8, C)` latent.
pub trait LatentEncoder: Send + Sync {
    fn id(&self) -> &str;
    fn encode(&self, video: &Tensor4) -> Result<Tensor4, LatentError>;
}

/// Deterministic linear stand-in for a video VAE encoder.
///
/// Each latent cell averages its video block (one frame for latent frame 0,
/// four frames otherwise; 8×8 pixels) and lifts the mean RGB to 16 channels
/// with [`channel_lift_matrix`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceEncoder;

/// The fixed `16 × 3` channel lift:
/// `W[k][c] = (2·frac(φ·(3k + c + 1)) − 1) / 255` with `φ = 0.6180339887`.
pub fn channel_lift_matrix() -> [[f32; 3]; LATENT_CHANNELS] {
    const PHI: f64 = 0.618_033_988_7;
    let mut w = [[0.0f32; 3]; LATENT_CHANNELS];
    for (k, row) in w.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let x = (PHI * (3 * k + c + 1) as f64).fract();
            *v = ((2.0 * x - 1.0) / 255.0) as f32;
        }
    }
    w
}

impl LatentEncoder for ReferenceEncoder {
    fn id(&self) -> &str {
        "reference-linear-v1"
    }

    fn encode(&self, video: &Tensor4) -> Result<Tensor4, LatentError> {
        let [frames, h, w, ch] = video.dims();
        if ch != 3 {
            return Err(LatentError::Shape {
                left: video.dims(),
                right: [frames, h, w, 3],
            });
        }
        let lf = latent_frames(frames)?;
        check_spatial(h, w)?;
        let (lh, lw) = (h / SPATIAL_FACTOR, w / SPATIAL_FACTOR);
        let lift = channel_lift_matrix();
        let mut out = Tensor4::zeros([lf, lh, lw, LATENT_CHANNELS]);
        for k in 0..lf {
            let span = latent_frame_span(k);
            let count = (span.clone().count() * SPATIAL_FACTOR * SPATIAL_FACTOR) as f32;
            for lr in 0..lh {
                for lc in 0..lw {
                    let mut sum = [0.0f32; 3];
                    for t in span.clone() {
                        for r in lr * SPATIAL_FACTOR..(lr + 1) * SPATIAL_FACTOR {
                            for c in lc * SPATIAL_FACTOR..(lc + 1) * SPATIAL_FACTOR {
                                for (k3, s) in sum.iter_mut().enumerate() {
                                    *s += video.at(t, r, c, k3);
                                }
                            }
                        }
                    }
                    let mean = sum.map(|s| s / count);
                    for (ch_out, row) in lift.iter().enumerate() {
                        *out.at_mut(k, lr, lc, ch_out) =
                            row[0] * mean[0] + row[1] * mean[1] + row[2] * mean[2];
                    }
                }
            }
        }
        Ok(out)
    }
}
