use std::str::FromStr;

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::pdg::{clamp_pose, forward_kinematics, Pdg, PdgError, Pose};

/// Shape of the ramp from the rest pose to the target pose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Easing {
    #[default]
    Linear,
    /// `3x² − 2x³`.
    Smoothstep,
}

impl Easing {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Easing::Linear => x,
            Easing::Smoothstep => x * x * (3.0 - 2.0 * x),
        }
    }
}

impl FromStr for Easing {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(Easing::Linear),
            "smoothstep" => Ok(Easing::Smoothstep),
            other => Err(format!("unknown easing {other:?} (linear | smoothstep)")),
        }
    }
}

/// One pose per output frame; frame 0 is the rest pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionTimeline {
    pub poses: Vec<Pose>,
    pub easing: Easing,
}

impl MotionTimeline {
    /// `1 + T`.
    pub fn frame_count(&self) -> usize {
        self.poses.len()
    }

    pub fn is_static(&self) -> bool {
        self.poses.iter().all(Pose::is_zero)
    }
}

/// Ramps every parameter from 0 at frame 0 to the clamped target at frame
/// `frames`, scaled by `easing(t / frames)`.
pub fn interpolate_timeline(
    pdg: &Pdg,
    target: &Pose,
    frames: usize,
    easing: Easing,
) -> Result<MotionTimeline, MotionError> {
    if frames < 1 {
        return Err(MotionError::FrameCount(frames));
    }
    for key in target.params.keys() {
        if pdg.incoming(key).is_none() {
            return Err(PdgError::UnknownPoseKey { node: key.clone() }.into());
        }
    }
    let target = clamp_pose(pdg, target);
    let poses = (0..=frames)
        .map(|t| {
            if t == 0 {
                return Pose::zero();
            }
            let s = easing.apply(t as f64 / frames as f64);
            let params = target
                .params
                .iter()
                .map(|(k, &v)| {
                    let e = pdg.incoming(k).expect("checked above");
                    // keep the ramp inside the range despite rounding
                    (k.clone(), if t == frames { v } else { e.clamp(v * s) })
                })
                .collect();
            Pose { params }
        })
        .collect();
    Ok(MotionTimeline { poses, easing })
}

/// Points of every node (in [`Pdg::nodes`] order) for one frame.
pub type FrameClouds = Vec<Vec<Point3<f64>>>;

/// Applies forward kinematics of each frame's pose to the rest points.
pub fn transform_clouds(
    pdg: &Pdg,
    timeline: &MotionTimeline,
) -> Result<Vec<FrameClouds>, MotionError> {
    timeline
        .poses
        .par_iter()
        .map(|pose| {
            let world = forward_kinematics(pdg, pose)?;
            Ok(pdg
                .nodes()
                .iter()
                .map(|n| {
                    let t = &world[&n.id];
                    n.cloud.points.iter().map(|p| t.apply(p)).collect()
                })
                .collect())
        })
        .collect()
}
