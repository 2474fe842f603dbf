mod support;

use nalgebra::{Point3, Vector3};
use proptest::prelude::*;
use proxydyn::pdg::{clamp_pose, forward_kinematics, validate_pdg, MotionEdge, Pdg, Pose, Violation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::fk::{apply, max_distance_distortion, max_matrix_error, random_forest, world_matrix};

#[test]
fn fk_matches_homogeneous_oracle_on_random_forests() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..200 {
        let (pdg, pose) = random_forest(&mut rng);
        assert!(pdg.is_valid(), "{:?}", pdg.validate());
        let world = forward_kinematics(&pdg, &pose).unwrap();
        assert!(max_matrix_error(&pdg, &pose, &world) <= 1e-9);
        assert!(max_distance_distortion(&pdg, &world) <= 1e-9);
        for node in pdg.nodes() {
            let m = world_matrix(pdg.edges(), &pose, &node.id);
            for p in &node.cloud.points {
                assert!((world[&node.id].apply(p) - apply(&m, p)).norm() <= 1e-9);
            }
        }
    }
}

#[test]
fn zero_pose_is_identity_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (pdg, _) = random_forest(&mut rng);
        let world = forward_kinematics(&pdg, &Pose::zero()).unwrap();
        assert!(world.values().all(|t| t.is_identity(1e-12)));
    }
}

#[test]
fn drawer_slides_along_its_axis() {
    let (pdg, _) = support::fk::random_forest(&mut ChaCha8Rng::seed_from_u64(1));
    let mut nodes = pdg.nodes().to_vec();
    nodes.truncate(1);
    let id = nodes[0].id.clone();
    let axis = Vector3::new(0.0, 0.6, 0.8);
    let pdg = Pdg::new(nodes, vec![MotionEdge::translation("static", &id, axis, [0.0, 0.5])]);
    let world = forward_kinematics(&pdg, &Pose::zero().with(&id, 0.3)).unwrap();
    let p = Point3::new(1.0, 2.0, 3.0);
    assert!((world[&id].apply(&p) - (p + axis * 0.3)).norm() < 1e-15);
}

#[test]
fn door_quarter_turn_maps_corner() {
    let (pdg, _) = support::fk::random_forest(&mut ChaCha8Rng::seed_from_u64(1));
    let mut nodes = pdg.nodes().to_vec();
    nodes.truncate(1);
    let id = nodes[0].id.clone();
    let edge = MotionEdge::rotation(
        "static",
        &id,
        Vector3::z(),
        Point3::new(1.0, 0.0, 0.0),
        [0.0, std::f64::consts::PI],
    );
    let pdg = Pdg::new(nodes, vec![edge]);
    let world = forward_kinematics(&pdg, &Pose::zero().with(&id, std::f64::consts::FRAC_PI_2)).unwrap();
    let q = world[&id].apply(&Point3::new(2.0, 0.0, 5.0));
    assert!((q - Point3::new(1.0, 1.0, 5.0)).norm() < 1e-12);
}

fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fk_oracle_property(seed in seeds()) {
        let (pdg, pose) = random_forest(&mut ChaCha8Rng::seed_from_u64(seed));
        let world = forward_kinematics(&pdg, &pose).unwrap();
        prop_assert!(max_matrix_error(&pdg, &pose, &world) <= 1e-9);
        prop_assert!(max_distance_distortion(&pdg, &world) <= 1e-9);
        prop_assert!(world.values().all(|t| t.is_rigid(1e-9)));
    }

    #[test]
    fn clamped_pose_is_in_range_and_idempotent(seed in seeds(), scale in -10.0f64..10.0) {
        let (pdg, pose) = random_forest(&mut ChaCha8Rng::seed_from_u64(seed));
        let wild = Pose { params: pose.params.iter().map(|(k, v)| (k.clone(), v * scale)).collect() };
        let c = clamp_pose(&pdg, &wild);
        for e in pdg.edges() {
            let v = c.get(&e.child);
            prop_assert!(e.range[0] <= v && v <= e.range[1]);
        }
        prop_assert_eq!(clamp_pose(&pdg, &c), c);
    }

    #[test]
    fn back_edge_is_reported_as_cycle(seed in seeds()) {
        let (pdg, _) = random_forest(&mut ChaCha8Rng::seed_from_u64(seed));
        // Re-parent the root-most edge under a node below it, if any.
        let edges = pdg.edges().to_vec();
        let Some(deep) = edges.iter().find(|e| e.parent != "static") else { return Ok(()) };
        let mut chain = vec![deep.parent.clone()];
        while let Some(up) = edges.iter().find(|e| &e.child == chain.last().unwrap()) {
            if up.parent == "static" { break }
            chain.push(up.parent.clone());
        }
        let top = chain.last().unwrap().clone();
        let mut mutated = edges.clone();
        match mutated.iter_mut().find(|e| e.child == top) {
            Some(e) => e.parent = deep.child.clone(),
            None => mutated.push(MotionEdge::translation(&deep.child, &top, Vector3::x(), [0.0, 1.0])),
        }
        let bad = Pdg::new(pdg.nodes().to_vec(), mutated);
        let violations = validate_pdg(&bad);
        prop_assert!(violations.iter().any(|v| matches!(v, Violation::Cycle { .. })), "{:?}", violations);
        prop_assert!(forward_kinematics(&bad, &Pose::zero()).is_err());
    }
}
