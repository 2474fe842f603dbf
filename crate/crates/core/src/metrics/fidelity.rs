use super::MetricsError;
use crate::raster::{Image, Mask};

/// Reported PSNR for identical images, and the ceiling for all others.
pub const PSNR_CAP: f64 = 100.0;
pub const SSIM_WINDOW: usize = 8;

fn same_dims(a: (usize, usize), b: (usize, usize)) -> Result<(), MetricsError> {
    if a != b {
        return Err(MetricsError::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

fn pixel_l2(p: &[u8; 3], q: &[u8; 3]) -> f64 {
    let d: f64 = (0..3).map(|k| (p[k] as f64 - q[k] as f64).powi(2)).sum();
    d.sqrt()
}

/// Mean per-pixel Euclidean RGB distance on the 0..255 scale.
pub fn idiff(a: &Image, b: &Image) -> Result<f64, MetricsError> {
    same_dims(a.dims(), b.dims())?;
    let n = a.as_slice().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| pixel_l2(p, q)).sum();
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedIdiff {
    pub value: f64,
    /// The mask selected no pixels; `value` is 0.
    pub empty: bool,
}

/// [`idiff`] restricted to pixels where `mask` is set.
pub fn idiff_masked(a: &Image, b: &Image, mask: &Mask) -> Result<MaskedIdiff, MetricsError> {
    same_dims(a.dims(), b.dims())?;
    same_dims(a.dims(), mask.dims())?;
    let (mut sum, mut n) = (0.0, 0usize);
    for ((p, q), &m) in a.as_slice().iter().zip(b.as_slice()).zip(mask.as_slice()) {
        if m {
            sum += pixel_l2(p, q);
            n += 1;
        }
    }
    Ok(match n {
        0 => MaskedIdiff { value: 0.0, empty: true },
        n => MaskedIdiff {
            value: sum / n as f64,
            empty: false,
        },
    })
}

/// Peak signal-to-noise ratio with peak 255, capped at [`PSNR_CAP`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64, MetricsError> {
    same_dims(a.dims(), b.dims())?;
    let n = a.as_slice().len() * 3;
    let se: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(p, q)| (0..3).map(|k| (p[k] as f64 - q[k] as f64).powi(2)).sum::<f64>())
        .sum();
    if se == 0.0 || n == 0 {
        return Ok(PSNR_CAP);
    }
    let mse = se / n as f64;
    Ok((10.0 * (255.0f64 * 255.0 / mse).log10()).min(PSNR_CAP))
}

/// Mean SSIM over every 8×8 window fully inside the image, per channel,
/// with uniform weights, `K1 = 0.01`, `K2 = 0.03`, `L = 255`.
pub fn ssim(a: &Image, b: &Image) -> Result<f64, MetricsError> {
    same_dims(a.dims(), b.dims())?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(MetricsError::TooSmall {
            height: h,
            width: w,
            minimum: SSIM_WINDOW,
        });
    }
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for ch in 0..3 {
        // Integral images of x, y, x², y², xy; exact in f64 for 8-bit data.
        let stride = w + 1;
        let mut sums = vec![[0.0f64; 5]; (h + 1) * stride];
        for r in 0..h {
            let mut row = [0.0f64; 5];
            for c in 0..w {
                let x = a.get(r, c)[ch] as f64;
                let y = b.get(r, c)[ch] as f64;
                for (acc, v) in row.iter_mut().zip([x, y, x * x, y * y, x * y]) {
                    *acc += v;
                }
                let above = sums[r * stride + c + 1];
                sums[(r + 1) * stride + c + 1] = std::array::from_fn(|k| above[k] + row[k]);
            }
        }
        for r in 0..=h - SSIM_WINDOW {
            for c in 0..=w - SSIM_WINDOW {
                let (r1, c1_) = (r + SSIM_WINDOW, c + SSIM_WINDOW);
                let s: [f64; 5] = std::array::from_fn(|k| {
                    sums[r1 * stride + c1_][k] + sums[r * stride + c][k]
                        - sums[r * stride + c1_][k]
                        - sums[r1 * stride + c][k]
                });
                let (mx, my) = (s[0] / n, s[1] / n);
                let vx = s[2] / n - mx * mx;
                let vy = s[3] / n - my * my;
                let cov = s[4] / n - mx * my;
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}
