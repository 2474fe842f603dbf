mod support;

use proxydyn::motion::{compile_motion, Easing};
use proxydyn::pdg::Pose;
use proxydyn::synth::synth_scene;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::disocclusion::{random_planar_scene, PlanarMotion, PlanarScene, Square};

fn run(scene: &PlanarScene, pose: &Pose) -> Vec<Vec<bool>> {
    let synth = synth_scene(&scene.spec()).unwrap();
    let compiled = compile_motion(
        &synth.pdg,
        &synth.scene.static_cloud(),
        synth.scene.camera(),
        pose,
        scene.frames,
        Easing::Linear,
    )
    .unwrap();
    compiled
        .disocclusion
        .frames
        .iter()
        .map(|m| m.as_slice().to_vec())
        .collect()
}

#[test]
fn matches_brute_force_on_random_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for seed in 0..20 {
        let scene = random_planar_scene(&mut rng, seed);
        let got = run(&scene, &scene.target_pose());
        let want = scene.expected();
        for (t, (g, w)) in got.iter().zip(&want).enumerate() {
            assert!(g == w, "scene {seed} frame {t}: {:?}", scene.squares);
        }
    }
}

fn strip_scene(dx: f64) -> PlanarScene {
    PlanarScene {
        height: 64,
        width: 96,
        focal: 100.0,
        principal: [32.0, 48.0],
        frames: 4,
        background_depth: 10.0,
        squares: vec![Square {
            id: "drawer".into(),
            rows: [16, 48],
            cols: [24, 56],
            depth: 4.0,
            motion: PlanarMotion::Slide { dx, dy: 0.0 },
        }],
        seed: 1,
    }
}

#[test]
fn slide_reveals_a_strip_of_the_slide_width() {
    let scene = strip_scene(12.0);
    let masks = run(&scene, &scene.target_pose());
    let last = masks.last().unwrap();
    let set: Vec<(usize, usize)> = (0..64 * 96).filter(|&k| last[k]).map(|k| (k / 96, k % 96)).collect();
    assert_eq!(set.len(), 32 * 12);
    assert!(set.iter().all(|&(r, c)| (16..48).contains(&r) && (24..36).contains(&c)));
    // Intermediate frames: strip width grows with the slide.
    for (t, m) in masks.iter().enumerate() {
        assert_eq!(m.iter().filter(|&&v| v).count(), 32 * 3 * t);
    }
}

#[test]
fn zero_pose_gives_empty_masks() {
    let scene = strip_scene(12.0);
    assert!(run(&scene, &Pose::zero()).iter().flatten().all(|&v| !v));
}

#[test]
fn sub_pixel_motion_reveals_nothing() {
    let scene = strip_scene(0.3);
    assert!(run(&scene, &scene.target_pose()).iter().flatten().all(|&v| !v));
}

#[test]
fn frame_zero_is_always_empty() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scene = random_planar_scene(&mut rng, 4);
    assert!(run(&scene, &scene.target_pose())[0].iter().all(|&v| !v));
}
