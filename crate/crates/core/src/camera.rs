//! Pinhole camera, depth unprojection and point projection.

use nalgebra::{Matrix3, Point3, Vector3};

use crate::pdg::PointCloud;
use crate::raster::{Field, Image, Mask};
use crate::transform::RigidTransform;

/// Pinhole intrinsics plus a world→camera extrinsic.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub extrinsic: RigidTransform,
}

/// Image-plane position of a point, in pixels, with its camera-frame depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelProjection {
    pub row: f64,
    pub col: f64,
    pub depth: f64,
}

impl PixelProjection {
    /// Nearest pixel, if it lies inside a `height × width` raster.
    #[inline]
    pub fn nearest_pixel(&self, height: usize, width: usize) -> Option<(usize, usize)> {
        let r = self.row.round();
        let c = self.col.round();
        if r >= 0.0 && c >= 0.0 && (r as usize) < height && (c as usize) < width {
            Some((r as usize, c as usize))
        } else {
            None
        }
    }
}

impl CameraModel {
    /// Camera with identity extrinsic.
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Self {
        Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            extrinsic: RigidTransform::identity(),
        }
    }

    /// Invariant check; returns a description of the first problem.
    pub fn check(&self) -> Result<(), String> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(format!("focal lengths must be positive ({}, {})", self.fx, self.fy));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return Err(format!("cx {} outside [0, {})", self.cx, self.width));
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(format!("cy {} outside [0, {})", self.cy, self.height));
        }
        if !self.extrinsic.is_rigid(1e-6) {
            return Err("extrinsic rotation is not a proper rotation".into());
        }
        Ok(())
    }

    /// Lifts pixel `(row, col)` at camera depth `depth` into world space.
    #[inline]
    pub fn unproject_pixel(&self, row: f64, col: f64, depth: f64) -> Point3<f64> {
        let cam = Point3::new(
            depth * (col - self.cx) / self.fx,
            depth * (row - self.cy) / self.fy,
            depth,
        );
        self.camera_to_world(&cam)
    }

    #[inline]
    fn camera_to_world(&self, p: &Point3<f64>) -> Point3<f64> {
        if self.extrinsic.rotation == Matrix3::identity() && self.extrinsic.translation == Vector3::zeros() {
            *p
        } else {
            self.extrinsic.inverse().apply(p)
        }
    }

    /// Projects a world point. Points at or behind the camera plane yield
    /// `None`.
    #[inline]
    pub fn project_point(&self, p: &Point3<f64>) -> Option<PixelProjection> {
        let q = self.extrinsic.apply(p);
        if !(q.z > 0.0) || !q.x.is_finite() || !q.y.is_finite() {
            return None;
        }
        Some(PixelProjection {
            row: self.fy * q.y / q.z + self.cy,
            col: self.fx * q.x / q.z + self.cx,
            depth: q.z,
        })
    }
}

/// Error listing masked pixels whose depth is missing.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{} masked pixel(s) have invalid depth, first at {:?}", .pixels.len(), .pixels.first())]
pub struct InvalidDepth {
    pub pixels: Vec<(usize, usize)>,
}

#[inline]
pub fn valid_depth(d: f32) -> bool {
    d.is_finite() && d > 0.0
}

/// Lifts every masked pixel into a world-space point with its pixel origin
/// and image color.
pub fn unproject(
    depth: &Field,
    image: &Image,
    camera: &CameraModel,
    mask: &Mask,
) -> Result<PointCloud, InvalidDepth> {
    let bad: Vec<_> = mask
        .set_pixels()
        .filter(|&(r, c)| !valid_depth(*depth.get(r, c)))
        .collect();
    if !bad.is_empty() {
        return Err(InvalidDepth { pixels: bad });
    }
    let mut cloud = PointCloud::default();
    for (r, c) in mask.set_pixels() {
        let d = *depth.get(r, c) as f64;
        cloud.points.push(camera.unproject_pixel(r as f64, c as f64, d));
        cloud.pixels.push((r, c));
        cloud.colors.push(*image.get(r, c));
    }
    Ok(cloud)
}

/// Projects each point; `None` marks points behind the camera.
pub fn project(points: &[Point3<f64>], camera: &CameraModel) -> Vec<Option<PixelProjection>> {
    points.iter().map(|p| camera.project_point(p)).collect()
}
