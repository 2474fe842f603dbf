//! The measured scene: image, metric depth, camera and per-part masks, plus
//! its on-disk manifest format.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{unproject, valid_depth, CameraModel};
use crate::error::{create_dir, read_file, read_text, write_file, IoError};
use crate::pdg::PointCloud;
use crate::raster::{self, Field, Grid, Image, Mask};
use crate::transform::RigidTransform;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: malformed JSON: {message}")]
    Json { path: String, message: String },
    #[error("{what} is {actual_h}x{actual_w}, expected {expected_h}x{expected_w}")]
    DimensionMismatch {
        what: String,
        expected_h: usize,
        expected_w: usize,
        actual_h: usize,
        actual_w: usize,
    },
    #[error("part masks {a} and {b} overlap at pixel ({row}, {col})")]
    MaskOverlap {
        a: String,
        b: String,
        row: usize,
        col: usize,
    },
    #[error("part {part}: {count} masked pixel(s) have invalid depth, first at ({}, {})", .first.0, .first.1)]
    InvalidDepthUnderMask {
        part: String,
        count: usize,
        first: (usize, usize),
    },
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error("{path}: bad PFM: {message}")]
    Pfm { path: String, message: String },
    #[error("16-bit PNG depth requires depth_scale in the manifest")]
    MissingDepthScale,
    #[error("unsupported depth file {0}: expected .pfm or .png")]
    DepthFormat(String),
    #[error("synthetic scene: {0}")]
    Synthetic(String),
}

impl SceneError {
    pub fn is_io(&self) -> bool {
        matches!(self, SceneError::Io(_))
    }
}

/// A validated scene. All rasters share the camera's `height × width`,
/// masks are pairwise disjoint, and every masked pixel has valid depth.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    image: Image,
    depth: Field,
    camera: CameraModel,
    part_masks: BTreeMap<String, Mask>,
}

impl Scene {
    pub fn new(
        image: Image,
        depth: Field,
        camera: CameraModel,
        part_masks: BTreeMap<String, Mask>,
    ) -> Result<Self, SceneError> {
        camera.check().map_err(SceneError::Camera)?;
        let expected = (camera.height, camera.width);
        let check = |what: String, dims: (usize, usize)| {
            if dims == expected {
                Ok(())
            } else {
                Err(SceneError::DimensionMismatch {
                    what,
                    expected_h: expected.0,
                    expected_w: expected.1,
                    actual_h: dims.0,
                    actual_w: dims.1,
                })
            }
        };
        check("image".into(), image.dims())?;
        check("depth".into(), depth.dims())?;
        for (id, m) in &part_masks {
            check(format!("mask {id}"), m.dims())?;
        }

        let mut owner: Grid<Option<&str>> = Grid::filled(expected.0, expected.1, None);
        for (id, m) in &part_masks {
            for (r, c) in m.set_pixels() {
                if let Some(prev) = owner.get(r, c) {
                    return Err(SceneError::MaskOverlap {
                        a: prev.to_string(),
                        b: id.clone(),
                        row: r,
                        col: c,
                    });
                }
                owner.set(r, c, Some(id));
            }
            let bad: Vec<_> = m
                .set_pixels()
                .filter(|&(r, c)| !valid_depth(*depth.get(r, c)))
                .collect();
            if let Some(&first) = bad.first() {
                return Err(SceneError::InvalidDepthUnderMask {
                    part: id.clone(),
                    count: bad.len(),
                    first,
                });
            }
        }
        Ok(Self {
            image,
            depth,
            camera,
            part_masks,
        })
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn depth(&self) -> &Field {
        &self.depth
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn part_masks(&self) -> &BTreeMap<String, Mask> {
        &self.part_masks
    }

    /// `(height, width)`.
    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    /// Pixels not claimed by any part.
    pub fn static_mask(&self) -> Mask {
        let (h, w) = self.dims();
        let mut any = Grid::filled(h, w, false);
        for m in self.part_masks.values() {
            any.union_with(m);
        }
        any.map(|&b| !b)
    }

    /// Point cloud of one part's masked pixels.
    pub fn part_cloud(&self, id: &str) -> Option<PointCloud> {
        let mask = self.part_masks.get(id)?;
        Some(self.lift(mask).expect("masked depth validated at construction"))
    }

    /// Lifts an arbitrary mask. Fails if any masked pixel lacks depth.
    pub fn lift(&self, mask: &Mask) -> Result<PointCloud, crate::camera::InvalidDepth> {
        unproject(&self.depth, &self.image, &self.camera, mask)
    }

    /// Point cloud of the unsegmented scene. Static pixels without valid depth
    /// are skipped; they render black.
    pub fn static_cloud(&self) -> PointCloud {
        let stat = self.static_mask();
        let usable = Grid::from_fn(stat.height(), stat.width(), |r, c| {
            *stat.get(r, c) && valid_depth(*self.depth.get(r, c))
        });
        self.lift(&usable).expect("filtered to valid depth")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneManifest {
    pub image: PathBuf,
    pub depth: PathBuf,
    /// Meters per unit for 16-bit PNG depth. Unused for PFM.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_scale: Option<f64>,
    pub camera: PathBuf,
    pub masks: BTreeMap<String, PathBuf>,
    /// Free-form note naming the external tool that produced depth/masks.
    /// Not interpreted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_tool: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDocument {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrinsic: Option<ExtrinsicDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrinsicDocument {
    /// Row-major 3×3 rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&CameraModel> for CameraDocument {
    fn from(c: &CameraModel) -> Self {
        let extrinsic = (!c.extrinsic.is_identity(0.0)).then(|| {
            let r = &c.extrinsic.rotation;
            ExtrinsicDocument {
                rotation: [
                    [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
                    [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
                    [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
                ],
                translation: c.extrinsic.translation.into(),
            }
        });
        Self {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            extrinsic,
        }
    }
}

impl From<&CameraDocument> for CameraModel {
    fn from(d: &CameraDocument) -> Self {
        let extrinsic = match &d.extrinsic {
            None => RigidTransform::identity(),
            Some(e) => RigidTransform {
                rotation: Matrix3::from_fn(|i, j| e.rotation[i][j]),
                translation: Vector3::from(e.translation),
            },
        };
        Self {
            fx: d.fx,
            fy: d.fy,
            cx: d.cx,
            cy: d.cy,
            width: d.width,
            height: d.height,
            extrinsic,
        }
    }
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, SceneError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| SceneError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads and validates a scene from its JSON manifest. Relative paths resolve
/// against the manifest's directory.
pub fn load_scene(manifest_path: &Path) -> Result<Scene, SceneError> {
    let manifest: SceneManifest = parse_json(manifest_path)?;
    load_scene_manifest(&manifest, manifest_path.parent().unwrap_or(Path::new(".")))
}

/// Loads a scene from an already-parsed manifest; relative paths resolve
/// against `base`.
pub fn load_scene_manifest(manifest: &SceneManifest, base: &Path) -> Result<Scene, SceneError> {

    let image = raster::load_rgb_png(&resolve(base, &manifest.image))?;
    let camera_doc: CameraDocument = parse_json(&resolve(base, &manifest.camera))?;
    let camera = CameraModel::from(&camera_doc);

    let depth_path = resolve(base, &manifest.depth);
    let ext = depth_path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let depth = match ext.as_deref() {
        Some("pfm") => read_pfm(&depth_path)?,
        Some("png") => {
            let scale = manifest.depth_scale.ok_or(SceneError::MissingDepthScale)?;
            raster::load_u16_png(&depth_path)?.map(|&v| (v as f64 * scale) as f32)
        }
        _ => return Err(SceneError::DepthFormat(depth_path.display().to_string())),
    };

    let mut masks = BTreeMap::new();
    for (id, p) in &manifest.masks {
        masks.insert(id.clone(), raster::load_mask_png(&resolve(base, p))?);
    }
    Scene::new(image, depth, camera, masks)
}

/// Writes the scene as PNG/PFM/JSON files plus `scene.json` under `dir`.
/// Returns the manifest path.
pub fn save_scene(scene: &Scene, dir: &Path) -> Result<PathBuf, SceneError> {
    create_dir(&dir.join("masks"))?;
    raster::save_rgb_png(&scene.image, &dir.join("image.png"))?;
    write_pfm(&scene.depth, &dir.join("depth.pfm"))?;
    let camera = CameraDocument::from(&scene.camera);
    write_file(
        &dir.join("camera.json"),
        serde_json::to_string_pretty(&camera).unwrap().as_bytes(),
    )?;
    let mut masks = BTreeMap::new();
    for (i, (id, m)) in scene.part_masks.iter().enumerate() {
        let rel = PathBuf::from(format!("masks/part_{i:03}.png"));
        raster::save_mask_png(m, &dir.join(&rel))?;
        masks.insert(id.clone(), rel);
    }
    let manifest = SceneManifest {
        image: "image.png".into(),
        depth: "depth.pfm".into(),
        depth_scale: None,
        camera: "camera.json".into(),
        masks,
        external_tool: None,
    };
    let path = dir.join("scene.json");
    write_file(
        &path,
        serde_json::to_string_pretty(&manifest).unwrap().as_bytes(),
    )?;
    Ok(path)
}

/// Reads a single-channel PFM (`Pf`). Negative scale means little-endian.
/// PFM stores rows bottom-to-top; the result is top-to-bottom.
pub fn read_pfm(path: &Path) -> Result<Field, SceneError> {
    let bytes = read_file(path)?;
    let bad = |message: &str| SceneError::Pfm {
        path: path.display().to_string(),
        message: message.to_string(),
    };
    // Header: three whitespace-terminated tokens after the magic line.
    let mut pos = 0;
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    // exactly one whitespace byte separates the header from the payload
    pos += 1;
    if tokens[0] != "Pf" {
        return Err(bad("expected single-channel 'Pf' magic"));
    }
    let width: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let scale: f64 = tokens[3].parse().map_err(|_| bad("bad scale"))?;
    let little = scale < 0.0;
    let payload = bytes.get(pos..).unwrap_or(&[]);
    if payload.len() != 4 * width * height {
        return Err(bad("payload size does not match dimensions"));
    }
    let mut grid = Grid::filled(height, width, 0.0f32);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().unwrap();
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let (file_row, col) = (i / width, i % width);
        grid.set(height - 1 - file_row, col, v);
    }
    Ok(grid)
}

/// Writes a little-endian single-channel PFM.
pub fn write_pfm(field: &Field, path: &Path) -> Result<(), SceneError> {
    let (h, w) = field.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for r in (0..h).rev() {
        for c in 0..w {
            out.extend_from_slice(&field.get(r, c).to_le_bytes());
        }
    }
    Ok(write_file(path, &out)?)
}
