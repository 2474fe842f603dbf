//! Forward kinematics with homogeneous 4×4 matrices.

use std::collections::BTreeMap;

use nalgebra::{Matrix4, Point3, Rotation3, Translation3, Unit, Vector3};
use proxydyn::pdg::{MotionEdge, MotionKind, PartNode, Pdg, PointCloud, Pose, STATIC_ROOT};
use proxydyn::raster::Grid;
use rand::Rng;

pub fn edge_matrix(e: &MotionEdge, q: f64) -> Matrix4<f64> {
    match e.kind {
        MotionKind::Translation => Translation3::from(e.axis * q).to_homogeneous(),
        MotionKind::Rotation => {
            let c = e.center.coords;
            let r = Rotation3::from_axis_angle(&Unit::new_normalize(e.axis), q).to_homogeneous();
            Translation3::from(c).to_homogeneous() * r * Translation3::from(-c).to_homogeneous()
        }
    }
}

/// World matrix of `id`: product of edge matrices from the root down.
pub fn world_matrix(edges: &[MotionEdge], pose: &Pose, id: &str) -> Matrix4<f64> {
    match edges.iter().find(|e| e.child == id) {
        None => Matrix4::identity(),
        Some(e) => {
            let parent = if e.parent == STATIC_ROOT {
                Matrix4::identity()
            } else {
                world_matrix(edges, pose, &e.parent)
            };
            parent * edge_matrix(e, pose.get(id))
        }
    }
}

pub fn apply(m: &Matrix4<f64>, p: &Point3<f64>) -> Point3<f64> {
    Point3::from_homogeneous(m * p.to_homogeneous()).unwrap()
}

fn unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// A random valid forest of 1..=5 nodes plus a pose inside every range.
pub fn random_forest(rng: &mut impl Rng) -> (Pdg, Pose) {
    let n = rng.random_range(1..=5usize);
    let (h, w) = (5, 6);
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut pose = Pose::zero();
    for i in 0..n {
        let id = format!("n{i}");
        let k = rng.random_range(2..=w);
        let mut cloud = PointCloud::default();
        let mut footprint = Grid::filled(h, w, false);
        for j in 0..k {
            cloud.points.push(Point3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(1.0..8.0),
            ));
            cloud.pixels.push((i, j));
            cloud.colors.push([0, 0, 0]);
            footprint.set(i, j, true);
        }
        nodes.push(PartNode {
            id: id.clone(),
            cloud,
            footprint,
            movable: true,
        });
        // A few nodes stay rigidly attached to the static root.
        if rng.random_bool(0.1) {
            continue;
        }
        let parent = match rng.random_range(0..=i) {
            0 => STATIC_ROOT.to_string(),
            j => format!("n{}", j - 1),
        };
        let range = [rng.random_range(-3.0..=0.0), rng.random_range(0.0..=3.0)];
        let edge = if rng.random_bool(0.5) {
            MotionEdge::translation(&parent, &id, unit(rng), range)
        } else {
            let center = Point3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            MotionEdge::rotation(&parent, &id, unit(rng), center, range)
        };
        let q = if range[1] > range[0] {
            rng.random_range(range[0]..=range[1])
        } else {
            0.0
        };
        pose = pose.with(&id, q);
        edges.push(edge);
    }
    (Pdg::new(nodes, edges), pose)
}

/// Largest absolute entry-wise difference between the implementation's
/// transforms and the oracle, over every node.
pub fn max_matrix_error(pdg: &Pdg, pose: &Pose, got: &BTreeMap<String, proxydyn::RigidTransform>) -> f64 {
    let mut worst = 0.0f64;
    for node in pdg.nodes() {
        let want = world_matrix(pdg.edges(), pose, &node.id);
        let t = &got[&node.id];
        for r in 0..3 {
            for c in 0..3 {
                worst = worst.max((t.rotation[(r, c)] - want[(r, c)]).abs());
            }
            worst = worst.max((t.translation[r] - want[(r, 3)]).abs());
        }
    }
    worst
}

/// Largest relative change in pairwise point distance within any node.
pub fn max_distance_distortion(pdg: &Pdg, got: &BTreeMap<String, proxydyn::RigidTransform>) -> f64 {
    let mut worst = 0.0f64;
    for node in pdg.nodes() {
        let t = &got[&node.id];
        let pts = &node.cloud.points;
        let moved: Vec<_> = pts.iter().map(|p| t.apply(p)).collect();
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                let d0 = (pts[a] - pts[b]).norm();
                let d1 = (moved[a] - moved[b]).norm();
                if d0 > 0.0 {
                    worst = worst.max((d1 - d0).abs() / d0);
                }
            }
        }
    }
    worst
}
