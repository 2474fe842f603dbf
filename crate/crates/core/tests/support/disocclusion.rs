//! Brute-force disocclusion for synthetic rectangles that slide or rotate in
//! the image plane. Everything is computed in pixel space: with `fx = fy` and
//! motion parallel to the image plane, a slide by `(dx, dy)` pixels and a
//! rotation about the z-axis through a pivot pixel act on pixel centers
//! directly.

use std::f64::consts::PI;

use proxydyn::pdg::{MotionKind, Pose, STATIC_ROOT};
use proxydyn::synth::{Background, RectPrimitive, SyntheticMotion, SyntheticSpec};
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub enum PlanarMotion {
    Slide { dx: f64, dy: f64 },
    /// Pivot is `(row, col)`; positive angles turn `+col` towards `+row`.
    Rotate { pivot: (f64, f64), angle: f64 },
}

#[derive(Debug, Clone)]
pub struct Square {
    pub id: String,
    pub rows: [usize; 2],
    pub cols: [usize; 2],
    pub depth: f64,
    pub motion: PlanarMotion,
}

#[derive(Debug, Clone)]
pub struct PlanarScene {
    pub height: usize,
    pub width: usize,
    pub focal: f64,
    pub principal: [f64; 2],
    pub frames: usize,
    pub background_depth: f64,
    pub squares: Vec<Square>,
    pub seed: u64,
}

impl Square {
    /// Pixel-center position `(row, col)` of rest pixel `(r, c)` at progress `s`.
    pub fn moved(&self, r: usize, c: usize, s: f64) -> (f64, f64) {
        let (r, c) = (r as f64, c as f64);
        match self.motion {
            PlanarMotion::Slide { dx, dy } => (r + dy * s, c + dx * s),
            PlanarMotion::Rotate { pivot: (pr, pc), angle } => {
                let a = angle * s;
                let (u, v) = (c - pc, r - pr);
                (pr + u * a.sin() + v * a.cos(), pc + u * a.cos() - v * a.sin())
            }
        }
    }

    fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.rows[0]..self.rows[1]).flat_map(move |r| (self.cols[0]..self.cols[1]).map(move |c| (r, c)))
    }
}

impl PlanarScene {
    pub fn spec(&self) -> SyntheticSpec {
        let primitives = self
            .squares
            .iter()
            .enumerate()
            .map(|(i, sq)| {
                let motion = match sq.motion {
                    PlanarMotion::Slide { dx, dy } => {
                        let n = dx.hypot(dy);
                        let s = n * sq.depth / self.focal;
                        SyntheticMotion {
                            parent: STATIC_ROOT.into(),
                            kind: MotionKind::Translation,
                            axis: [dx / n, dy / n, 0.0],
                            center: [0.0; 3],
                            pivot_pixel: None,
                            range: [-s - 1.0, s + 1.0],
                        }
                    }
                    PlanarMotion::Rotate { pivot, .. } => SyntheticMotion {
                        parent: STATIC_ROOT.into(),
                        kind: MotionKind::Rotation,
                        axis: [0.0, 0.0, 1.0],
                        center: [0.0; 3],
                        pivot_pixel: Some([pivot.0, pivot.1]),
                        range: [-PI, PI],
                    },
                };
                RectPrimitive {
                    id: sq.id.clone(),
                    rows: sq.rows,
                    cols: sq.cols,
                    depth: sq.depth,
                    texture_seed: self.seed * 31 + i as u64,
                    movable: true,
                    motion: Some(motion),
                }
            })
            .collect();
        SyntheticSpec {
            width: self.width,
            height: self.height,
            focal: self.focal,
            principal: Some(self.principal),
            background: Background {
                depth: self.background_depth,
                texture_seed: self.seed,
            },
            primitives,
        }
    }

    pub fn target_pose(&self) -> Pose {
        self.squares.iter().fold(Pose::zero(), |pose, sq| {
            let q = match sq.motion {
                PlanarMotion::Slide { dx, dy } => dx.hypot(dy) * sq.depth / self.focal,
                PlanarMotion::Rotate { angle, .. } => angle,
            };
            pose.with(&sq.id, q)
        })
    }

    fn progress(&self, t: usize) -> f64 {
        t as f64 / self.frames as f64
    }

    /// Smallest distance of any moved coordinate to a rounding boundary.
    pub fn rounding_margin(&self) -> f64 {
        let mut m = f64::INFINITY;
        for t in 0..=self.frames {
            for sq in &self.squares {
                for (r, c) in sq.pixels() {
                    let (y, x) = sq.moved(r, c, self.progress(t));
                    for v in [y, x] {
                        m = m.min(((v - v.floor()) - 0.5).abs());
                    }
                }
            }
        }
        m
    }

    /// Expected masks for frames `0..=T`, row-major.
    pub fn expected(&self) -> Vec<Vec<bool>> {
        let (h, w) = (self.height, self.width);
        let mut rest = vec![false; h * w];
        for sq in &self.squares {
            for (r, c) in sq.pixels() {
                rest[r * w + c] = true;
            }
        }
        (0..=self.frames)
            .map(|t| {
                if t == 0 {
                    return vec![false; h * w];
                }
                let mut depth = vec![f64::INFINITY; h * w];
                let mut owner = vec![usize::MAX; h * w];
                for (i, sq) in self.squares.iter().enumerate() {
                    for (r, c) in sq.pixels() {
                        let (y, x) = sq.moved(r, c, self.progress(t));
                        let (y, x) = (y.round(), x.round());
                        if y < 0.0 || x < 0.0 || y >= h as f64 || x >= w as f64 {
                            continue;
                        }
                        let k = y as usize * w + x as usize;
                        if sq.depth < depth[k] {
                            depth[k] = sq.depth;
                            owner[k] = i;
                        }
                    }
                }
                let mut covered = vec![false; h * w];
                for i in 0..self.squares.len() {
                    let won: Vec<bool> = owner.iter().map(|&o| o == i).collect();
                    for (k, v) in naive_close(&won, h, w).into_iter().enumerate() {
                        covered[k] |= v;
                    }
                }
                rest.iter().zip(&covered).map(|(&a, &b)| a && !b).collect()
            })
            .collect()
    }
}

/// 3×3 dilation (outside = unset) followed by 3×3 erosion (outside = set).
pub fn naive_close(m: &[bool], h: usize, w: usize) -> Vec<bool> {
    if !m.iter().any(|&v| v) {
        return m.to_vec();
    }
    let at = |m: &[bool], r: isize, c: isize, outside: bool| {
        if r < 0 || c < 0 || r >= h as isize || c >= w as isize {
            outside
        } else {
            m[r as usize * w + c as usize]
        }
    };
    let mut dil = vec![false; h * w];
    let mut out = vec![false; h * w];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut any = false;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    any |= at(m, r + dr, c + dc, false);
                }
            }
            dil[r as usize * w + c as usize] = any;
        }
    }
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut all = true;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    all &= at(&dil, r + dr, c + dc, true);
                }
            }
            out[r as usize * w + c as usize] = all;
        }
    }
    out
}

fn random_square(rng: &mut impl Rng, id: &str, depth: f64, h: usize, w: usize) -> Square {
    let (sh, sw) = (rng.random_range(14..36), rng.random_range(14..36));
    let r0 = rng.random_range(10..h - sh - 10);
    let c0 = rng.random_range(10..w - sw - 10);
    let motion = if rng.random_bool(0.5) {
        PlanarMotion::Slide {
            dx: rng.random_range(-25.0..25.0),
            dy: rng.random_range(-15.0..15.0),
        }
    } else {
        // Hinge at a random corner, like a door or lid.
        let pr = if rng.random_bool(0.5) { r0 as f64 - 0.5 } else { (r0 + sh) as f64 - 0.5 };
        let pc = if rng.random_bool(0.5) { c0 as f64 - 0.5 } else { (c0 + sw) as f64 - 0.5 };
        PlanarMotion::Rotate {
            pivot: (pr, pc),
            angle: rng.random_range(-1.2..1.2),
        }
    };
    Square {
        id: id.into(),
        rows: [r0, r0 + sh],
        cols: [c0, c0 + sw],
        depth,
        motion,
    }
}

fn overlaps(a: &Square, b: &Square) -> bool {
    a.rows[0] < b.rows[1] && b.rows[0] < a.rows[1] && a.cols[0] < b.cols[1] && b.cols[0] < a.cols[1]
}

/// Random one- or two-part scene whose moved coordinates all stay at least
/// `1e-6` away from a rounding boundary, so that floating-point noise in the
/// world-space pipeline cannot flip a pixel.
pub fn random_planar_scene(rng: &mut impl Rng, seed: u64) -> PlanarScene {
    let (h, w) = (120, 160);
    loop {
        let mut squares = vec![random_square(rng, "part0", 4.0, h, w)];
        if rng.random_bool(0.5) {
            let b = random_square(rng, "part1", 6.0, h, w);
            if overlaps(&squares[0], &b) {
                continue;
            }
            squares.push(b);
        }
        let scene = PlanarScene {
            height: h,
            width: w,
            focal: 100.0,
            principal: [60.0, 80.0],
            frames: 8,
            background_depth: 10.0,
            squares,
            seed,
        };
        if scene.rounding_margin() >= 1e-6 {
            return scene;
        }
    }
}
