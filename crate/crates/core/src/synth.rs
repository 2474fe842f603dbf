//! Analytic synthetic scenes: textured fronto-parallel rectangles in front of
//! a textured background plane, each optionally driven by a motion edge.
//!
//! Everything is exact by construction: the depth raster holds the
//! primitive's depth, masks are the visible rectangle pixels, and the
//! returned graph matches the declared motions.

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::document::{EdgeDocument, NodeDocument, PdgDocument, DOCUMENT_VERSION};
use crate::pdg::{MotionKind, Pdg};
use crate::raster::{Grid, Image};
use crate::scene::{Scene, SceneError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    /// Shared focal length in pixels (`fx = fy`).
    pub focal: f64,
    /// Principal point; defaults to `(height / 2, width / 2)` as `(cy, cx)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal: Option<[f64; 2]>,
    pub background: Background,
    pub primitives: Vec<RectPrimitive>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub depth: f64,
    pub texture_seed: u64,
}

/// An axis-aligned rectangle covering rows `rows[0]..rows[1]` and columns
/// `cols[0]..cols[1]` (half-open) at constant depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectPrimitive {
    pub id: String,
    pub rows: [usize; 2],
    pub cols: [usize; 2],
    pub depth: f64,
    pub texture_seed: u64,
    #[serde(default = "yes")]
    pub movable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub motion: Option<SyntheticMotion>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticMotion {
    pub parent: String,
    pub kind: MotionKind,
    pub axis: [f64; 3],
    /// Pivot in meters. Overridden by `pivot_pixel`.
    #[serde(default)]
    pub center: [f64; 3],
    /// Pivot given as `(row, col)` on the primitive's own depth plane.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot_pixel: Option<[f64; 2]>,
    pub range: [f64; 2],
}

/// Output of [`synth_scene`].
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub scene: Scene,
    pub pdg: Pdg,
    pub document: PdgDocument,
}

impl SyntheticSpec {
    pub fn camera(&self) -> CameraModel {
        let [cy, cx] = self
            .principal
            .unwrap_or([(self.height / 2) as f64, (self.width / 2) as f64]);
        CameraModel::new(self.focal, self.focal, cx, cy, self.width, self.height)
    }
}

fn texture(seed: u64, h: usize, w: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Grid::from_fn(h, w, |_, _| rng.random::<[u8; 3]>())
}

/// Rasterizes the spec into a scene and its ground-truth graph.
pub fn synth_scene(spec: &SyntheticSpec) -> Result<SyntheticScene, SceneError> {
    let (h, w) = (spec.height, spec.width);
    let camera = spec.camera();
    camera.check().map_err(SceneError::Camera)?;
    if !(spec.background.depth > 0.0) {
        return Err(SceneError::Synthetic("background depth must be positive".into()));
    }

    let mut image = texture(spec.background.texture_seed, h, w);
    let mut depth = Grid::filled(h, w, spec.background.depth as f32);
    let mut owner: Grid<Option<usize>> = Grid::filled(h, w, None);

    for (i, p) in spec.primitives.iter().enumerate() {
        let [r0, r1] = p.rows;
        let [c0, c1] = p.cols;
        if r0 >= r1 || c0 >= c1 || r1 > h || c1 > w {
            return Err(SceneError::Synthetic(format!(
                "primitive {}: empty or out-of-bounds extent",
                p.id
            )));
        }
        if !(p.depth > 0.0 && p.depth < spec.background.depth) {
            return Err(SceneError::Synthetic(format!(
                "primitive {}: depth must lie in (0, background depth)",
                p.id
            )));
        }
        let tex = texture(p.texture_seed, r1 - r0, c1 - c0);
        for r in r0..r1 {
            for c in c0..c1 {
                let claim = match owner.get(r, c) {
                    None => true,
                    Some(j) => {
                        let other = &spec.primitives[*j];
                        if other.depth == p.depth {
                            return Err(SceneError::Synthetic(format!(
                                "primitives {} and {} overlap at equal depth",
                                other.id, p.id
                            )));
                        }
                        p.depth < other.depth
                    }
                };
                if claim {
                    owner.set(r, c, Some(i));
                    depth.set(r, c, p.depth as f32);
                    image.set(r, c, *tex.get(r - r0, c - c0));
                }
            }
        }
    }

    let mut masks = BTreeMap::new();
    for (i, p) in spec.primitives.iter().enumerate() {
        let m = owner.map(|o| *o == Some(i));
        if !m.any() {
            return Err(SceneError::Synthetic(format!(
                "primitive {} is fully occluded",
                p.id
            )));
        }
        if masks.insert(p.id.clone(), m).is_some() {
            return Err(SceneError::Synthetic(format!("duplicate primitive id {}", p.id)));
        }
    }
    let scene = Scene::new(image, depth, camera.clone(), masks)?;

    let document = PdgDocument {
        version: DOCUMENT_VERSION,
        nodes: spec
            .primitives
            .iter()
            .map(|p| NodeDocument {
                id: p.id.clone(),
                movable: p.movable,
                footprint_path: None,
                points_path: None,
            })
            .collect(),
        edges: spec
            .primitives
            .iter()
            .filter_map(|p| {
                let m = p.motion.as_ref()?;
                let center = match m.pivot_pixel {
                    Some([row, col]) => camera.unproject_pixel(row, col, p.depth),
                    None => Point3::from(m.center),
                };
                Some(EdgeDocument {
                    parent: m.parent.clone(),
                    child: p.id.clone(),
                    kind: m.kind,
                    axis: Vector3::from(m.axis).into(),
                    center: center.coords.into(),
                    range: m.range,
                })
            })
            .collect(),
    };
    let pdg = document
        .build(&scene, std::path::Path::new("."))
        .map_err(|e| SceneError::Synthetic(e.to_string()))?;
    Ok(SyntheticScene {
        scene,
        pdg,
        document,
    })
}
