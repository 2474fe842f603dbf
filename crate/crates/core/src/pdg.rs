//! The proxy dynamic graph: part point clouds connected by 1-DoF motion
//! edges, and forward kinematics over it.
//!
//! The graph is a kinematic forest hanging off an implicit static root
//! ([`STATIC_ROOT`]) that stands for the unsegmented scene. Each node has at
//! most one incoming edge, every edge carries one scalar parameter, and the
//! rest parameter `0` lies inside every edge's range so the zero pose
//! reproduces the input image.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::Mask;
use crate::transform::RigidTransform;

/// Reserved id of the static scene node. Edges may use it as `parent`.
pub const STATIC_ROOT: &str = "static";

const AXIS_TOLERANCE: f64 = 1e-9;

/// Points lifted from pixels, with their source pixel and color.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    /// `(row, col)` each point was lifted from.
    pub pixels: Vec<(usize, usize)>,
    pub colors: Vec<[u8; 3]>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartNode {
    pub id: String,
    pub cloud: PointCloud,
    /// Pixels the part covers at rest.
    pub footprint: Mask,
    pub movable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    Translation,
    Rotation,
}

/// A 1-DoF joint driving `child` relative to `parent`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionEdge {
    pub parent: String,
    pub child: String,
    pub kind: MotionKind,
    pub axis: Vector3<f64>,
    /// Pivot of a rotation. Ignored for translations.
    pub center: Point3<f64>,
    /// `[lo, hi]`, meters for translation and radians for rotation.
    pub range: [f64; 2],
}

impl MotionEdge {
    pub fn translation(parent: &str, child: &str, axis: Vector3<f64>, range: [f64; 2]) -> Self {
        Self {
            parent: parent.into(),
            child: child.into(),
            kind: MotionKind::Translation,
            axis,
            center: Point3::origin(),
            range,
        }
    }

    pub fn rotation(
        parent: &str,
        child: &str,
        axis: Vector3<f64>,
        center: Point3<f64>,
        range: [f64; 2],
    ) -> Self {
        Self {
            parent: parent.into(),
            child: child.into(),
            kind: MotionKind::Rotation,
            axis,
            center,
            range,
        }
    }

    pub fn clamp(&self, param: f64) -> f64 {
        param.clamp(self.range[0], self.range[1])
    }

    fn label(&self) -> String {
        format!("{}->{}", self.parent, self.child)
    }
}

/// One broken graph invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateNode { node: String },
    ReservedId { node: String },
    EmptyNode { node: String },
    LengthMismatch { node: String },
    PixelOutsideFootprint { node: String, row: usize, col: usize },
    FootprintSize { node: String },
    FootprintOverlap { a: String, b: String, row: usize, col: usize },
    UnknownEndpoint { edge: String, node: String },
    SelfLoop { edge: String },
    NonUnitAxis { edge: String, norm: String },
    BadRange { edge: String, lo: String, hi: String },
    NonFinite { edge: String },
    MultipleParents { node: String, parents: Vec<String> },
    Cycle { nodes: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode { node } => write!(f, "node {node}: duplicate id"),
            Violation::ReservedId { node } => {
                write!(f, "node {node}: id is reserved for the static root")
            }
            Violation::EmptyNode { node } => write!(f, "node {node}: empty point cloud"),
            Violation::LengthMismatch { node } => write!(
                f,
                "node {node}: points, pixel origins and colors differ in length"
            ),
            Violation::PixelOutsideFootprint { node, row, col } => write!(
                f,
                "node {node}: point origin ({row}, {col}) lies outside the footprint"
            ),
            Violation::FootprintSize { node } => {
                write!(f, "node {node}: footprint size differs from other nodes")
            }
            Violation::FootprintOverlap { a, b, row, col } => {
                write!(f, "nodes {a} and {b}: footprints overlap at ({row}, {col})")
            }
            Violation::UnknownEndpoint { edge, node } => {
                write!(f, "edge {edge}: unknown node {node}")
            }
            Violation::SelfLoop { edge } => write!(f, "edge {edge}: child equals parent"),
            Violation::NonUnitAxis { edge, norm } => {
                write!(f, "edge {edge}: axis is not unit length (norm {norm})")
            }
            Violation::BadRange { edge, lo, hi } => write!(
                f,
                "edge {edge}: range [{lo}, {hi}] must satisfy lo <= 0 <= hi"
            ),
            Violation::NonFinite { edge } => {
                write!(f, "edge {edge}: non-finite axis, center or range")
            }
            Violation::MultipleParents { node, parents } => write!(
                f,
                "node {node}: multiple parents ({})",
                parents.join(", ")
            ),
            Violation::Cycle { nodes } => write!(f, "cycle: {}", nodes.join(" -> ")),
        }
    }
}

#[derive(Debug, Error)]
pub enum PdgError {
    #[error("edge {edge}: parameter {value} outside range [{lo}, {hi}]")]
    OutOfRange {
        edge: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("pose names {node}, which no motion edge drives")]
    UnknownPoseKey { node: String },
    #[error("graph is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Per-edge motion parameters, keyed by the driven child's id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub params: BTreeMap<String, f64>,
}

impl Pose {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn with(mut self, child: &str, value: f64) -> Self {
        self.params.insert(child.to_string(), value);
        self
    }

    pub fn get(&self, child: &str) -> f64 {
        self.params.get(child).copied().unwrap_or(0.0)
    }

    /// True when every parameter is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.params.values().all(|&v| v == 0.0)
    }
}

/// A proxy dynamic graph. Immutable after construction; the invariant check
/// runs once in [`Pdg::new`].
#[derive(Debug, Clone)]
pub struct Pdg {
    nodes: Vec<PartNode>,
    edges: Vec<MotionEdge>,
    violations: Vec<Violation>,
}

impl Pdg {
    /// Builds a graph. Nodes are ordered by id, which fixes the node order
    /// used for depth tie-breaking downstream. Invalid graphs are accepted;
    /// inspect [`Pdg::validate`].
    pub fn new(mut nodes: Vec<PartNode>, edges: Vec<MotionEdge>) -> Self {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let violations = collect_violations(&nodes, &edges);
        Self {
            nodes,
            edges,
            violations,
        }
    }

    pub fn nodes(&self) -> &[PartNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[MotionEdge] {
        &self.edges
    }

    pub fn node(&self, id: &str) -> Option<&PartNode> {
        self.nodes
            .binary_search_by(|n| n.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    /// The edge driving `child`, if any.
    pub fn incoming(&self, child: &str) -> Option<&MotionEdge> {
        self.edges.iter().find(|e| e.child == child)
    }

    /// Every broken invariant; empty iff the graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        self.violations.clone()
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Fails with every violation when the graph is invalid.
    pub fn ensure_valid(&self) -> Result<(), PdgError> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(PdgError::Invalid(self.violations.clone()))
        }
    }
}

/// Free-function form of [`Pdg::validate`].
pub fn validate_pdg(pdg: &Pdg) -> Vec<Violation> {
    pdg.validate()
}

fn collect_violations(nodes: &[PartNode], edges: &[MotionEdge]) -> Vec<Violation> {
    let ids: Vec<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
    let mut out = structural_violations(&ids, edges);
    for n in nodes {
        check_node(n, &mut out);
    }
    check_footprints(nodes, &mut out);
    out.sort();
    out.dedup();
    out
}

/// The checks that need only node ids and edges: ids, endpoints, axes,
/// ranges, parents and cycles. Geometry is not inspected.
pub fn structural_violations(node_ids: &[&str], edges: &[MotionEdge]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for &id in node_ids {
        if !ids.insert(id) {
            out.push(Violation::DuplicateNode { node: id.to_string() });
        }
        if id == STATIC_ROOT {
            out.push(Violation::ReservedId { node: id.to_string() });
        }
    }

    for e in edges {
        let label = e.label();
        let parent_known = e.parent == STATIC_ROOT || ids.contains(e.parent.as_str());
        let child_known = ids.contains(e.child.as_str());
        for (known, end) in [(parent_known, &e.parent), (child_known, &e.child)] {
            if !known {
                out.push(Violation::UnknownEndpoint {
                    edge: label.clone(),
                    node: end.clone(),
                });
            }
        }
        if e.parent == e.child {
            out.push(Violation::SelfLoop {
                edge: label.clone(),
            });
        }
        let finite = e.axis.iter().all(|v| v.is_finite())
            && e.center.iter().all(|v| v.is_finite())
            && e.range.iter().all(|v| v.is_finite());
        if !finite {
            out.push(Violation::NonFinite {
                edge: label.clone(),
            });
            continue;
        }
        let norm = e.axis.norm();
        if (norm - 1.0).abs() > AXIS_TOLERANCE {
            out.push(Violation::NonUnitAxis {
                edge: label.clone(),
                norm: format!("{norm}"),
            });
        }
        let [lo, hi] = e.range;
        if !(lo <= 0.0 && 0.0 <= hi) {
            out.push(Violation::BadRange {
                edge: label,
                lo: format!("{lo}"),
                hi: format!("{hi}"),
            });
        }
    }

    let mut parents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in edges {
        if e.parent != e.child {
            parents.entry(&e.child).or_default().push(&e.parent);
        }
    }
    for (child, ps) in &parents {
        if ps.len() > 1 {
            out.push(Violation::MultipleParents {
                node: child.to_string(),
                parents: ps.iter().map(|s| s.to_string()).collect(),
            });
        }
    }
    out.extend(find_cycles(edges).into_iter().map(|nodes| Violation::Cycle { nodes }));
    out.sort();
    out.dedup();
    out
}

fn check_node(n: &PartNode, out: &mut Vec<Violation>) {
    let c = &n.cloud;
    if c.points.len() != c.pixels.len() || c.points.len() != c.colors.len() {
        out.push(Violation::LengthMismatch { node: n.id.clone() });
    }
    if c.points.is_empty() {
        out.push(Violation::EmptyNode { node: n.id.clone() });
    }
    let (h, w) = n.footprint.dims();
    if let Some(&(row, col)) = c
        .pixels
        .iter()
        .find(|&&(r, c)| r >= h || c >= w || !*n.footprint.get(r, c))
    {
        out.push(Violation::PixelOutsideFootprint {
            node: n.id.clone(),
            row,
            col,
        });
    }
}

fn check_footprints(nodes: &[PartNode], out: &mut Vec<Violation>) {
    let Some(first) = nodes.first() else {
        return;
    };
    let dims = first.footprint.dims();
    let mut owner: Vec<Option<usize>> = vec![None; dims.0 * dims.1];
    let mut reported = BTreeSet::new();
    for (i, n) in nodes.iter().enumerate() {
        if n.footprint.dims() != dims {
            out.push(Violation::FootprintSize { node: n.id.clone() });
            continue;
        }
        for (r, c) in n.footprint.set_pixels() {
            let slot = &mut owner[r * dims.1 + c];
            match *slot {
                Some(j) if reported.insert((j, i)) => out.push(Violation::FootprintOverlap {
                    a: nodes[j].id.clone(),
                    b: n.id.clone(),
                    row: r,
                    col: c,
                }),
                Some(_) => {}
                None => *slot = Some(i),
            }
        }
    }
}

/// Cycles found by DFS over parent -> child links, each reported once as a
/// node list rotated to start at its smallest id.
fn find_cycles(edges: &[MotionEdge]) -> Vec<Vec<String>> {
    let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in edges {
        if e.parent != e.child {
            adjacency.entry(&e.parent).or_default().push(&e.child);
        }
    }
    // Iterative three-color DFS over parent -> child links.
    let mut color: HashMap<&str, u8> = HashMap::new();
    let mut cycles = BTreeSet::new();
    let mut starts: Vec<&str> = adjacency.keys().copied().collect();
    starts.sort_unstable();
    for start in starts {
        if color.get(start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
        let mut path: Vec<&str> = vec![start];
        color.insert(start, 1);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let children = adjacency.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if *next < children.len() {
                let child = children[*next];
                *next += 1;
                match color.get(child).copied().unwrap_or(0) {
                    0 => {
                        color.insert(child, 1);
                        stack.push((child, 0));
                        path.push(child);
                    }
                    1 => {
                        let pos = path.iter().position(|&n| n == child).unwrap();
                        let mut cyc: Vec<String> =
                            path[pos..].iter().map(|s| s.to_string()).collect();
                        let min = (0..cyc.len()).min_by_key(|&i| &cyc[i]).unwrap();
                        cyc.rotate_left(min);
                        cycles.insert(cyc);
                    }
                    _ => {}
                }
            } else {
                color.insert(node, 2);
                stack.pop();
                path.pop();
            }
        }
    }
    cycles.into_iter().collect()
}

/// Rigid motion produced by one edge at parameter `param`.
///
/// Translation moves by `param·axis`; rotation turns by `param` radians about
/// the line through `center` along `axis`.
pub fn edge_transform(edge: &MotionEdge, param: f64) -> Result<RigidTransform, PdgError> {
    let [lo, hi] = edge.range;
    if !(param >= lo && param <= hi) {
        return Err(PdgError::OutOfRange {
            edge: edge.label(),
            value: param,
            lo,
            hi,
        });
    }
    Ok(match edge.kind {
        MotionKind::Translation => RigidTransform::from_translation(edge.axis * param),
        MotionKind::Rotation => RigidTransform::rotation_about(&edge.axis, &edge.center, param),
    })
}

/// World transform of every node under `pose`, composed parent-first along
/// the root-to-node path. Nodes without a pose entry use parameter 0.
pub fn forward_kinematics(
    pdg: &Pdg,
    pose: &Pose,
) -> Result<BTreeMap<String, RigidTransform>, PdgError> {
    pdg.ensure_valid()?;
    let incoming: HashMap<&str, &MotionEdge> =
        pdg.edges.iter().map(|e| (e.child.as_str(), e)).collect();
    for key in pose.params.keys() {
        if !incoming.contains_key(key.as_str()) {
            return Err(PdgError::UnknownPoseKey { node: key.clone() });
        }
    }

    let mut world: BTreeMap<String, RigidTransform> = BTreeMap::new();
    for node in &pdg.nodes {
        // Walk up to the first resolved ancestor, then resolve downwards.
        let mut chain = Vec::new();
        let mut cur = node.id.as_str();
        let base = loop {
            if let Some(t) = world.get(cur) {
                break *t;
            }
            match incoming.get(cur) {
                Some(e) => {
                    chain.push(*e);
                    if e.parent == STATIC_ROOT {
                        break RigidTransform::identity();
                    }
                    cur = &e.parent;
                }
                None => {
                    // A node with no incoming edge hangs off the static root
                    // and has not been resolved yet.
                    world.insert(cur.to_string(), RigidTransform::identity());
                    break RigidTransform::identity();
                }
            }
        };
        let mut acc = base;
        for e in chain.into_iter().rev() {
            let local = edge_transform(e, pose.get(&e.child))?;
            acc = acc.compose(&local);
            world.insert(e.child.clone(), acc);
        }
    }
    Ok(world)
}

/// Clamps each parameter into its edge's range. Keys without an edge pass
/// through untouched.
pub fn clamp_pose(pdg: &Pdg, pose: &Pose) -> Pose {
    let params = pose
        .params
        .iter()
        .map(|(k, &v)| {
            let v = match pdg.incoming(k) {
                Some(e) => e.clamp(v),
                None => v,
            };
            (k.clone(), v)
        })
        .collect();
    Pose { params }
}
