//! Point splatting with a z-buffer.
//!
//! Every point covers its nearest pixel. Per pixel the strictly nearest depth
//! wins; equal depths go to the lower layer rank (the static scene is rank 0,
//! graph nodes follow in id order) and then to the lower point index.

use nalgebra::Point3;
use rayon::prelude::*;

use super::timeline::FrameClouds;
use super::MotionError;
use crate::camera::{CameraModel, PixelProjection};
use crate::pdg::{Pdg, PointCloud};
use crate::raster::{Grid, Image};

/// How points are colored in the tracking video.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Palette {
    /// Rest position normalized to the rest bounding box of all points,
    /// mapped `x → R`, `y → G`, `z → B` over `0..=255`.
    #[default]
    RestPosition,
}

impl Palette {
    pub fn colors(self, all_rest: &[&[Point3<f64>]]) -> Vec<Vec<[u8; 3]>> {
        match self {
            Palette::RestPosition => {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for p in all_rest.iter().flat_map(|s| s.iter()) {
                    for k in 0..3 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                all_rest
                    .iter()
                    .map(|s| {
                        s.iter()
                            .map(|p| {
                                let mut c = [0u8; 3];
                                for k in 0..3 {
                                    let extent = hi[k] - lo[k];
                                    if extent > 0.0 {
                                        let v = (p[k] - lo[k]) / extent * 255.0;
                                        c[k] = v.round().clamp(0.0, 255.0) as u8;
                                    }
                                }
                                c
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }
}

/// Per-frame projections of one node's points.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTrack {
    pub node: String,
    pub movable: bool,
    /// `frames[t][i]`: projection of point `i` at frame `t`, `None` if
    /// behind the camera.
    pub frames: Vec<Vec<Option<PixelProjection>>>,
    pub tracking_colors: Vec<[u8; 3]>,
    pub image_colors: Vec<[u8; 3]>,
}

/// Raw correspondences behind a tracking video: where each point lands in
/// each frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondences {
    pub height: usize,
    pub width: usize,
    pub frame_count: usize,
    /// Static scene projections; constant across frames.
    pub static_points: Vec<Option<PixelProjection>>,
    pub static_tracking_colors: Vec<[u8; 3]>,
    pub static_image_colors: Vec<[u8; 3]>,
    /// One track per graph node, in node order (layer rank `i + 1`).
    pub tracks: Vec<NodeTrack>,
}

/// Winner per pixel after splatting one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ZBuffer {
    pub height: usize,
    pub width: usize,
    pub depth: Vec<f64>,
    /// `(layer, point)`: layer 0 is static, `i + 1` is track `i`.
    pub owner: Vec<Option<(u32, u32)>>,
}

impl ZBuffer {
    fn splat(height: usize, width: usize, layers: &[&[Option<PixelProjection>]]) -> Self {
        let mut zb = ZBuffer {
            height,
            width,
            depth: vec![f64::INFINITY; height * width],
            owner: vec![None; height * width],
        };
        // Layers and points are visited in rank/index order, so strict `<`
        // implements the tie-breaking rule.
        for (layer, projs) in layers.iter().enumerate() {
            for (i, p) in projs.iter().enumerate() {
                let Some(p) = p else { continue };
                let Some((r, c)) = p.nearest_pixel(height, width) else {
                    continue;
                };
                let k = r * width + c;
                if p.depth < zb.depth[k] {
                    zb.depth[k] = p.depth;
                    zb.owner[k] = Some((layer as u32, i as u32));
                }
            }
        }
        zb
    }
}

impl Correspondences {
    /// Projects static and per-frame node clouds. `clouds[t][i]` are node
    /// `i`'s points at frame `t`.
    pub fn build(
        pdg: &Pdg,
        clouds: &[FrameClouds],
        static_cloud: &PointCloud,
        camera: &CameraModel,
        palette: Palette,
    ) -> Result<Self, MotionError> {
        let nodes = pdg.nodes();
        if let Some(bad) = clouds.iter().find(|f| f.len() != nodes.len()) {
            return Err(MotionError::CloudCount {
                expected: nodes.len(),
                actual: bad.len(),
            });
        }
        let total: usize = static_cloud.len() + nodes.iter().map(|n| n.cloud.len()).sum::<usize>();
        if total == 0 {
            return Err(MotionError::EmptyScene);
        }
        let mut rest: Vec<&[Point3<f64>]> = vec![&static_cloud.points];
        rest.extend(nodes.iter().map(|n| n.cloud.points.as_slice()));
        let mut colors = palette.colors(&rest).into_iter();
        let static_tracking_colors = colors.next().unwrap();

        let project = |pts: &[Point3<f64>]| -> Vec<Option<PixelProjection>> {
            pts.iter().map(|p| camera.project_point(p)).collect()
        };
        let tracks = nodes
            .iter()
            .enumerate()
            .zip(colors)
            .map(|((i, n), tracking_colors)| NodeTrack {
                node: n.id.clone(),
                movable: n.movable,
                frames: clouds.par_iter().map(|f| project(&f[i])).collect(),
                tracking_colors,
                image_colors: n.cloud.colors.clone(),
            })
            .collect();
        Ok(Self {
            height: camera.height,
            width: camera.width,
            frame_count: clouds.len(),
            static_points: project(&static_cloud.points),
            static_tracking_colors,
            static_image_colors: static_cloud.colors.clone(),
            tracks,
        })
    }

    pub fn zbuffer(&self, frame: usize) -> ZBuffer {
        let mut layers: Vec<&[Option<PixelProjection>]> = vec![&self.static_points];
        layers.extend(self.tracks.iter().map(|t| t.frames[frame].as_slice()));
        ZBuffer::splat(self.height, self.width, &layers)
    }

    /// Projection of `(layer, point)` at `frame`.
    pub fn projection(&self, layer: u32, point: u32, frame: usize) -> Option<PixelProjection> {
        if layer == 0 {
            self.static_points[point as usize]
        } else {
            self.tracks[layer as usize - 1].frames[frame][point as usize]
        }
    }

    fn render_frame(&self, frame: usize, tracking: bool) -> Image {
        let zb = self.zbuffer(frame);
        let data = zb
            .owner
            .iter()
            .map(|o| match *o {
                None => [0, 0, 0],
                Some((0, i)) if tracking => self.static_tracking_colors[i as usize],
                Some((0, i)) => self.static_image_colors[i as usize],
                Some((l, i)) => {
                    let t = &self.tracks[l as usize - 1];
                    if tracking {
                        t.tracking_colors[i as usize]
                    } else {
                        t.image_colors[i as usize]
                    }
                }
            })
            .collect();
        Grid::from_vec(self.height, self.width, data).unwrap()
    }
}

/// Tracking frames plus the correspondences they were rendered from.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingVideo {
    pub frames: Vec<Image>,
    pub correspondences: Correspondences,
}

/// Renders the tracking video with the default palette.
pub fn render_tracking(
    pdg: &Pdg,
    clouds: &[FrameClouds],
    static_cloud: &PointCloud,
    camera: &CameraModel,
) -> Result<TrackingVideo, MotionError> {
    render_tracking_with(pdg, clouds, static_cloud, camera, Palette::default())
}

pub fn render_tracking_with(
    pdg: &Pdg,
    clouds: &[FrameClouds],
    static_cloud: &PointCloud,
    camera: &CameraModel,
    palette: Palette,
) -> Result<TrackingVideo, MotionError> {
    let correspondences = Correspondences::build(pdg, clouds, static_cloud, camera, palette)?;
    let frames = (0..correspondences.frame_count)
        .into_par_iter()
        .map(|t| correspondences.render_frame(t, true))
        .collect();
    Ok(TrackingVideo {
        frames,
        correspondences,
    })
}

/// Re-renders the motion with each point's original image color instead of
/// its tracking color: what a perfect motion-faithful generator would show,
/// with revealed pixels left black.
pub fn render_appearance(correspondences: &Correspondences) -> Vec<Image> {
    (0..correspondences.frame_count)
        .into_par_iter()
        .map(|t| correspondences.render_frame(t, false))
        .collect()
}
