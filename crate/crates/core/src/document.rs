//! JSON documents for graphs and poses.
//!
//! A graph document names its nodes and edges; node geometry comes from the
//! scene. A node's footprint is the scene mask with the same id unless
//! `footprint_path` points at a mask PNG, and its points are lifted from that
//! footprint unless `points_path` supplies a precomputed `.pdgt` cloud with
//! dims `[1, 1, N, 8]` holding `row, col, x, y, z, r, g, b` per point.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{read_text, IoError};
use crate::pdg::{structural_violations, MotionEdge, MotionKind, PartNode, Pdg, PointCloud, Pose, Violation};
use crate::raster;
use crate::scene::Scene;
use crate::tensor::{Tensor4, TensorError};

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{origin}: {message}")]
    Json { origin: String, message: String },
    #[error("unsupported document version {0}, expected {DOCUMENT_VERSION}")]
    Version(u32),
    #[error("node {0}: no footprint_path and the scene has no mask with that id")]
    MissingFootprint(String),
    #[error("node {0}: no points_path and no scene to lift the footprint from")]
    MissingPoints(String),
    #[error("node {node}: footprint has {count} pixel(s) without valid depth")]
    FootprintDepth { node: String, count: usize },
    #[error("node {node}: points file must have dims [1, 1, N, 8], got {dims:?}")]
    PointsShape { node: String, dims: [usize; 4] },
}

impl DocumentError {
    pub fn is_io(&self) -> bool {
        match self {
            DocumentError::Io(_) => true,
            DocumentError::Tensor(e) => e.is_io(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: String,
    pub movable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub footprint_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDocument {
    pub parent: String,
    pub child: String,
    pub kind: MotionKind,
    pub axis: [f64; 3],
    pub center: [f64; 3],
    pub range: [f64; 2],
}

impl From<&MotionEdge> for EdgeDocument {
    fn from(e: &MotionEdge) -> Self {
        Self {
            parent: e.parent.clone(),
            child: e.child.clone(),
            kind: e.kind,
            axis: e.axis.into(),
            center: e.center.coords.into(),
            range: e.range,
        }
    }
}

impl From<&EdgeDocument> for MotionEdge {
    fn from(d: &EdgeDocument) -> Self {
        Self {
            parent: d.parent.clone(),
            child: d.child.clone(),
            kind: d.kind,
            axis: Vector3::from(d.axis),
            center: Point3::from(d.center),
            range: d.range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdgDocument {
    pub version: u32,
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<EdgeDocument>,
}

fn json_error(origin: &str, e: serde_json::Error) -> DocumentError {
    DocumentError::Json {
        origin: origin.to_string(),
        message: e.to_string(),
    }
}

impl PdgDocument {
    pub fn parse(text: &str, origin: &str) -> Result<Self, DocumentError> {
        let doc: Self = serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
        if doc.version != DOCUMENT_VERSION {
            return Err(DocumentError::Version(doc.version));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    /// Violations detectable from the document alone, without a scene.
    pub fn structural_violations(&self) -> Vec<Violation> {
        let ids: Vec<&str> = self.nodes.iter().map(|n| n.id.as_str()).collect();
        let edges: Vec<MotionEdge> = self.edges.iter().map(MotionEdge::from).collect();
        structural_violations(&ids, &edges)
    }

    /// Every node carries its own footprint and points files.
    pub fn is_self_contained(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.footprint_path.is_some() && n.points_path.is_some())
    }

    /// Resolves node geometry against `scene` and builds the graph. Relative
    /// paths resolve against `base`. The returned graph may still carry
    /// violations; check [`Pdg::validate`].
    pub fn build(&self, scene: &Scene, base: &Path) -> Result<Pdg, DocumentError> {
        self.build_with(Some(scene), base)
    }

    /// Builds a [self-contained](Self::is_self_contained) document without a
    /// scene.
    pub fn build_standalone(&self, base: &Path) -> Result<Pdg, DocumentError> {
        self.build_with(None, base)
    }

    fn build_with(&self, scene: Option<&Scene>, base: &Path) -> Result<Pdg, DocumentError> {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let footprint = match (&n.footprint_path, scene) {
                (Some(p), _) => raster::load_mask_png(&base.join(p))?,
                (None, Some(scene)) => scene
                    .part_masks()
                    .get(&n.id)
                    .cloned()
                    .ok_or_else(|| DocumentError::MissingFootprint(n.id.clone()))?,
                (None, None) => return Err(DocumentError::MissingFootprint(n.id.clone())),
            };
            let cloud = match (&n.points_path, scene) {
                (Some(p), _) => read_points(&base.join(p), &n.id)?,
                (None, Some(scene)) if footprint.dims() != scene.dims() => {
                    // Leave the size mismatch to the validator.
                    PointCloud::default()
                }
                (None, Some(scene)) => scene
                    .lift(&footprint)
                    .map_err(|e| DocumentError::FootprintDepth {
                        node: n.id.clone(),
                        count: e.pixels.len(),
                    })?,
                (None, None) => return Err(DocumentError::MissingPoints(n.id.clone())),
            };
            nodes.push(PartNode {
                id: n.id.clone(),
                cloud,
                footprint,
                movable: n.movable,
            });
        }
        let edges = self.edges.iter().map(MotionEdge::from).collect();
        Ok(Pdg::new(nodes, edges))
    }
}

fn read_points(path: &Path, node: &str) -> Result<PointCloud, DocumentError> {
    let t = Tensor4::read(path)?;
    let dims = t.dims();
    if dims[0] != 1 || dims[1] != 1 || dims[3] != 8 {
        return Err(DocumentError::PointsShape {
            node: node.to_string(),
            dims,
        });
    }
    let mut cloud = PointCloud::default();
    for row in t.as_slice().chunks_exact(8) {
        cloud.pixels.push((row[0] as usize, row[1] as usize));
        cloud
            .points
            .push(Point3::new(row[2] as f64, row[3] as f64, row[4] as f64));
        cloud
            .colors
            .push([row[5] as u8, row[6] as u8, row[7] as u8]);
    }
    Ok(cloud)
}

/// Writes a point cloud in the `[1, 1, N, 8]` points-file layout.
pub fn write_points(cloud: &PointCloud, path: &Path) -> Result<(), TensorError> {
    let mut data = Vec::with_capacity(cloud.len() * 8);
    for i in 0..cloud.len() {
        let (r, c) = cloud.pixels[i];
        let p = cloud.points[i];
        let col = cloud.colors[i];
        data.extend_from_slice(&[
            r as f32, c as f32, p.x as f32, p.y as f32, p.z as f32, col[0] as f32,
            col[1] as f32, col[2] as f32,
        ]);
    }
    Tensor4::from_vec([1, 1, cloud.len(), 8], data)?.write(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseDocument {
    pub version: u32,
    pub params: BTreeMap<String, f64>,
}

impl PoseDocument {
    pub fn parse(text: &str, origin: &str) -> Result<Self, DocumentError> {
        let doc: Self = serde_json::from_str(text).map_err(|e| json_error(origin, e))?;
        if doc.version != DOCUMENT_VERSION {
            return Err(DocumentError::Version(doc.version));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn pose(&self) -> Pose {
        Pose {
            params: self.params.clone(),
        }
    }
}

impl From<&Pose> for PoseDocument {
    fn from(p: &Pose) -> Self {
        Self {
            version: DOCUMENT_VERSION,
            params: p.params.clone(),
        }
    }
}
