//! Synthetic scenes for the metric and pipeline checks.

use proxydyn::pdg::{MotionKind, Pose, STATIC_ROOT};
use proxydyn::synth::{Background, RectPrimitive, SyntheticMotion, SyntheticSpec};

pub const PANEL_FRAMES: usize = 16;
const FOCAL: f64 = 300.0;
const PANEL_DEPTH: f64 = 5.0;

/// A large textured panel at 240×360 sliding 1 px per frame along
/// `direction` (`(dx, dy)` in pixels, unit length along one axis) for
/// [`PANEL_FRAMES`] frames, in front of a textured static background.
pub fn sliding_panel(direction: (i32, i32), seed: u64) -> (SyntheticSpec, Pose) {
    let travel = PANEL_FRAMES as f64;
    let (rows, cols) = match direction {
        (1, 0) => ([20, 220], [8, 328]),
        (-1, 0) => ([20, 220], [32, 352]),
        (0, 1) => ([8, 208], [20, 340]),
        (0, -1) => ([32, 232], [20, 340]),
        _ => panic!("direction must be an axis unit step"),
    };
    let s = travel * PANEL_DEPTH / FOCAL;
    let spec = SyntheticSpec {
        width: 360,
        height: 240,
        focal: FOCAL,
        principal: Some([120.0, 180.0]),
        background: Background {
            depth: 10.0,
            texture_seed: seed,
        },
        primitives: vec![RectPrimitive {
            id: "panel".into(),
            rows,
            cols,
            depth: PANEL_DEPTH,
            texture_seed: seed + 1000,
            movable: true,
            motion: Some(SyntheticMotion {
                parent: STATIC_ROOT.into(),
                kind: MotionKind::Translation,
                axis: [direction.0 as f64, direction.1 as f64, 0.0],
                center: [0.0; 3],
                pivot_pixel: None,
                range: [-s, s],
            }),
        }],
    };
    (spec, Pose::zero().with("panel", s))
}

/// A cabinet-like scene: a static frame, a sliding drawer and a door hinged
/// on its left edge, at the given resolution (divisible by 8).
pub fn cabinet(height: usize, width: usize) -> (SyntheticSpec, Pose) {
    let (h, w) = (height as f64, width as f64);
    let px = |f: f64, n: f64| (f * n).round() as usize;
    let drawer_rows = [px(0.55, h), px(0.8, h)];
    let drawer_cols = [px(0.2, w), px(0.45, w)];
    let door_rows = [px(0.2, h), px(0.8, h)];
    let door_cols = [px(0.55, w), px(0.8, w)];
    let focal = w;
    let slide_px = 0.12 * w;
    let drawer_depth = 4.0;
    let spec = SyntheticSpec {
        width,
        height,
        focal,
        principal: None,
        background: Background {
            depth: 8.0,
            texture_seed: 7,
        },
        primitives: vec![
            RectPrimitive {
                id: "body".into(),
                rows: [px(0.15, h), px(0.85, h)],
                cols: [px(0.15, w), px(0.85, w)],
                depth: 5.0,
                texture_seed: 8,
                movable: false,
                motion: None,
            },
            RectPrimitive {
                id: "drawer".into(),
                rows: drawer_rows,
                cols: drawer_cols,
                depth: drawer_depth,
                texture_seed: 9,
                movable: true,
                motion: Some(SyntheticMotion {
                    parent: STATIC_ROOT.into(),
                    kind: MotionKind::Translation,
                    axis: [0.0, 1.0, 0.0],
                    center: [0.0; 3],
                    pivot_pixel: None,
                    range: [0.0, 0.5],
                }),
            },
            RectPrimitive {
                id: "door".into(),
                rows: door_rows,
                cols: door_cols,
                depth: drawer_depth,
                texture_seed: 10,
                movable: true,
                motion: Some(SyntheticMotion {
                    parent: STATIC_ROOT.into(),
                    kind: MotionKind::Rotation,
                    axis: [0.0, 1.0, 0.0],
                    center: [0.0; 3],
                    pivot_pixel: Some([h / 2.0, door_cols[0] as f64 - 0.5]),
                    range: [0.0, 1.5],
                }),
            },
        ],
    };
    let pose = Pose::zero()
        .with("drawer", slide_px * drawer_depth / focal)
        .with("door", 0.9);
    (spec, pose)
}
