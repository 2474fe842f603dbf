//! Compiles a graph and a target pose into per-frame point clouds, a tracking
//! video, the evolving disocclusion mask and ground-truth optical flow.

mod disocclusion;
pub mod export;
mod flow;
mod render;
mod timeline;

pub use disocclusion::{
    compute_disocclusion, disocclusion_from_correspondences, movable_coverage, DisocclusionMask,
};
pub use export::{read_flows, write_disocclusion, write_flows, write_frames, write_tracking};
pub use flow::{ground_truth_flow, FlowField};
pub use render::{
    render_appearance, render_tracking, render_tracking_with, Correspondences, NodeTrack, Palette,
    TrackingVideo, ZBuffer,
};
pub use timeline::{interpolate_timeline, transform_clouds, Easing, FrameClouds, MotionTimeline};

use thiserror::Error;

use crate::camera::CameraModel;
use crate::pdg::{Pdg, PdgError, PointCloud, Pose};

/// Default number of frames after the input frame (49 frames in total).
pub const DEFAULT_FRAMES: usize = 48;
/// Default output resolution `(height, width)`.
pub const DEFAULT_RESOLUTION: (usize, usize) = (480, 720);

#[derive(Debug, Error)]
pub enum MotionError {
    #[error(transparent)]
    Pdg(#[from] PdgError),
    #[error("timeline needs at least one frame after the input frame, got {0}")]
    FrameCount(usize),
    #[error("nothing to render: the scene has no points")]
    EmptyScene,
    #[error("frame {frame} out of range for {frames} frames")]
    FrameOutOfRange { frame: usize, frames: usize },
    #[error("expected {expected} per-node clouds, got {actual}")]
    CloudCount { expected: usize, actual: usize },
}

/// Everything the compile step produces for one (graph, pose) pair.
#[derive(Debug, Clone)]
pub struct CompiledMotion {
    pub timeline: MotionTimeline,
    pub tracking: TrackingVideo,
    pub disocclusion: DisocclusionMask,
    /// `flows[t]` maps frame `t` to `t + 1`.
    pub flows: Vec<FlowField>,
}

/// Interpolates `target` over `frames` steps, renders the tracking video and
/// derives disocclusion masks and ground-truth flow from the same z-buffers.
pub fn compile_motion(
    pdg: &Pdg,
    static_cloud: &PointCloud,
    camera: &CameraModel,
    target: &Pose,
    frames: usize,
    easing: Easing,
) -> Result<CompiledMotion, MotionError> {
    let timeline = interpolate_timeline(pdg, target, frames, easing)?;
    let clouds = transform_clouds(pdg, &timeline)?;
    let tracking = render_tracking(pdg, &clouds, static_cloud, camera)?;
    let disocclusion = disocclusion_from_correspondences(&tracking.correspondences);
    let flows = (0..frames)
        .map(|t| ground_truth_flow(&tracking.correspondences, t))
        .collect::<Result<_, _>>()?;
    Ok(CompiledMotion {
        timeline,
        tracking,
        disocclusion,
        flows,
    })
}
