use rayon::prelude::*;

use super::render::Correspondences;
use super::timeline::FrameClouds;
use super::{MotionError, Palette};
use crate::camera::CameraModel;
use crate::pdg::{Pdg, PointCloud};
use crate::raster::{Grid, Mask};

/// `(1 + T)` binary frames; a set pixel was covered by a movable part at rest
/// and is no longer covered at that frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DisocclusionMask {
    pub frames: Vec<Mask>,
}

impl DisocclusionMask {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames.first().map(Mask::dims).unwrap_or((0, 0))
    }

    pub fn is_empty(&self) -> bool {
        !self.frames.iter().any(Mask::any)
    }
}

/// Union over movable nodes of the pixels each node wins in the z-buffer at
/// `frame`. With `close` set, each node's footprint is closed (3×3) before
/// the union to seal splatting holes.
pub fn movable_coverage(corr: &Correspondences, frame: usize, close: bool) -> Mask {
    let zb = corr.zbuffer(frame);
    let mut union = Grid::filled(corr.height, corr.width, false);
    for (i, track) in corr.tracks.iter().enumerate() {
        if !track.movable {
            continue;
        }
        let layer = i as u32 + 1;
        let data = zb
            .owner
            .iter()
            .map(|o| matches!(o, Some((l, _)) if *l == layer))
            .collect();
        let footprint = Grid::from_vec(corr.height, corr.width, data).unwrap();
        if !footprint.any() {
            continue;
        }
        union.union_with(&if close { footprint.close() } else { footprint });
    }
    union
}

/// Disocclusion from precomputed correspondences.
pub fn disocclusion_from_correspondences(corr: &Correspondences) -> DisocclusionMask {
    let rest = movable_coverage(corr, 0, false);
    let frames = (0..corr.frame_count)
        .into_par_iter()
        .map(|t| {
            if t == 0 {
                return Grid::filled(corr.height, corr.width, false);
            }
            rest.difference(&movable_coverage(corr, t, true))
        })
        .collect();
    DisocclusionMask { frames }
}

pub fn compute_disocclusion(
    pdg: &Pdg,
    clouds: &[FrameClouds],
    static_cloud: &PointCloud,
    camera: &CameraModel,
) -> Result<DisocclusionMask, MotionError> {
    let corr = Correspondences::build(pdg, clouds, static_cloud, camera, Palette::default())?;
    Ok(disocclusion_from_correspondences(&corr))
}
