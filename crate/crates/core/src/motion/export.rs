//! On-disk exports: numbered PNG frames plus one `.pdgt` tensor per artifact.
//!
//! Invalid flow vectors are stored as NaN in both channels.

use std::path::Path;

use super::disocclusion::DisocclusionMask;
use super::flow::FlowField;
use super::render::TrackingVideo;
use crate::error::{create_dir, IoError};
use crate::raster::{save_mask_png, save_rgb_png, Grid, Image};
use crate::tensor::{Tensor4, TensorError};

/// Writes `{prefix}_{t:04}.png` for each frame into `dir`.
pub fn write_frames(frames: &[Image], dir: &Path, prefix: &str) -> Result<(), IoError> {
    create_dir(dir)?;
    for (t, f) in frames.iter().enumerate() {
        save_rgb_png(f, &dir.join(format!("{prefix}_{t:04}.png")))?;
    }
    Ok(())
}

pub fn video_tensor(frames: &[Image]) -> Tensor4 {
    let (h, w) = frames.first().map(Image::dims).unwrap_or((0, 0));
    let data = frames
        .iter()
        .flat_map(|f| f.as_slice().iter().flat_map(|px| px.map(f32::from)))
        .collect();
    Tensor4::from_vec([frames.len(), h, w, 3], data).expect("frames share dims")
}

/// Inverse of [`video_tensor`]; values are rounded and clamped to `0..=255`.
pub fn frames_from_tensor(t: &Tensor4) -> Result<Vec<Image>, TensorError> {
    let [n, h, w, c] = t.dims();
    if c != 3 {
        return Err(TensorError::Shape {
            left: t.dims(),
            right: [n, h, w, 3],
        });
    }
    Ok((0..n)
        .map(|i| {
            let px = t
                .frame(i)
                .chunks_exact(3)
                .map(|p| p.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect::<Vec<_>>())
                .map(|p| [p[0], p[1], p[2]])
                .collect();
            Grid::from_vec(h, w, px).expect("frame size matches dims")
        })
        .collect())
}

/// Inverse of [`mask_tensor`]; any nonzero value is set.
pub fn mask_from_tensor(t: &Tensor4) -> Result<DisocclusionMask, TensorError> {
    let [n, h, w, c] = t.dims();
    if c != 1 {
        return Err(TensorError::Shape {
            left: t.dims(),
            right: [n, h, w, 1],
        });
    }
    let frames = (0..n)
        .map(|i| Grid::from_vec(h, w, t.frame(i).iter().map(|&v| v != 0.0).collect()).expect("frame size matches dims"))
        .collect();
    Ok(DisocclusionMask { frames })
}

pub fn mask_tensor(mask: &DisocclusionMask) -> Tensor4 {
    let (h, w) = mask.dims();
    let data = mask
        .frames
        .iter()
        .flat_map(|f| f.as_slice().iter().map(|&b| if b { 1.0 } else { 0.0 }))
        .collect();
    Tensor4::from_vec([mask.frame_count(), h, w, 1], data).expect("frames share dims")
}

/// `track_%04d.png` frames plus `tracking.pdgt` in `dir`.
pub fn write_tracking(video: &TrackingVideo, dir: &Path) -> Result<(), TensorError> {
    write_frames(&video.frames, dir, "track")?;
    video_tensor(&video.frames).write(&dir.join("tracking.pdgt"))
}

/// `mask_%04d.png` frames (0/255) plus `mask.pdgt` in `dir`.
pub fn write_disocclusion(mask: &DisocclusionMask, dir: &Path) -> Result<(), TensorError> {
    create_dir(dir)?;
    for (t, f) in mask.frames.iter().enumerate() {
        save_mask_png(f, &dir.join(format!("mask_{t:04}.png")))?;
    }
    mask_tensor(mask).write(&dir.join("mask.pdgt"))
}

pub fn flow_tensor(flows: &[FlowField]) -> Tensor4 {
    let (h, w) = flows.first().map(|f| (f.height, f.width)).unwrap_or((0, 0));
    let mut data = Vec::with_capacity(flows.len() * h * w * 2);
    for f in flows {
        for (v, &ok) in f.flow.iter().zip(&f.valid) {
            if ok {
                data.extend_from_slice(&[v[0] as f32, v[1] as f32]);
            } else {
                data.extend_from_slice(&[f32::NAN, f32::NAN]);
            }
        }
    }
    Tensor4::from_vec([flows.len(), h, w, 2], data).expect("fields share dims")
}

pub fn write_flows(flows: &[FlowField], path: &Path) -> Result<(), TensorError> {
    flow_tensor(flows).write(path)
}

pub fn read_flows(path: &Path) -> Result<Vec<FlowField>, TensorError> {
    let t = Tensor4::read(path)?;
    let [n, h, w, c] = t.dims();
    if c != 2 {
        return Err(TensorError::Shape {
            left: t.dims(),
            right: [n, h, w, 2],
        });
    }
    Ok((0..n)
        .map(|i| {
            let frame = t.frame(i);
            let mut f = FlowField::zeros(h, w, false);
            for k in 0..h * w {
                let (dx, dy) = (frame[2 * k], frame[2 * k + 1]);
                if dx.is_finite() && dy.is_finite() {
                    f.flow[k] = [dx as f64, dy as f64];
                    f.valid[k] = true;
                }
            }
            f
        })
        .collect())
}
