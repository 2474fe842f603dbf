//! Coarse-to-fine block matching.
//!
//! Three pyramid levels built by 2×2 summation. At every level each pixel is
//! matched with a 16×16 window (offsets `-8..=7`, clipped at the border) under
//! an RGB sum-of-absolute-differences cost. The coarsest level searches a
//! full `±4` neighborhood; finer levels search `±2` around twice the coarser
//! estimate. Ties go to the smallest displacement (then smaller `dy`, then
//! smaller `dx`). Costs are integers, so results are exact and deterministic.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::MetricsError;
use crate::motion::FlowField;
use crate::raster::Image;

pub const LEVELS: usize = 3;
pub const WINDOW: usize = 16;
const COARSE_RADIUS: i32 = 4;
const REFINE_RADIUS: i32 = 2;

/// Anything that can turn a frame pair into a dense flow field.
pub trait FlowEstimator: Sync {
    fn estimate(&self, a: &Image, b: &Image) -> Result<FlowField, MetricsError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BlockMatcher;

impl FlowEstimator for BlockMatcher {
    fn estimate(&self, a: &Image, b: &Image) -> Result<FlowField, MetricsError> {
        estimate_flow(a, b)
    }
}

/// Integer RGB plane.
struct Plane {
    h: usize,
    w: usize,
    px: Vec<[u32; 3]>,
}

impl Plane {
    fn from_image(img: &Image) -> Self {
        Self {
            h: img.height(),
            w: img.width(),
            px: img.as_slice().iter().map(|p| p.map(u32::from)).collect(),
        }
    }

    fn downsample(&self) -> Self {
        let (h, w) = ((self.h / 2).max(1), (self.w / 2).max(1));
        let mut px = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                let mut s = [0u32; 3];
                for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let rr = (2 * r + dr).min(self.h - 1);
                    let cc = (2 * c + dc).min(self.w - 1);
                    let p = self.px[rr * self.w + cc];
                    for k in 0..3 {
                        s[k] += p[k];
                    }
                }
                px.push(s);
            }
        }
        Self { h, w, px }
    }

    #[inline]
    fn clamped(&self, r: i64, c: i64) -> [u32; 3] {
        let r = r.clamp(0, self.h as i64 - 1) as usize;
        let c = c.clamp(0, self.w as i64 - 1) as usize;
        self.px[r * self.w + c]
    }
}

/// Window SAD at every pixel for one global displacement `(dy, dx)`.
fn sad_map(a: &Plane, b: &Plane, dy: i32, dx: i32) -> Vec<u64> {
    let (h, w) = (a.h, a.w);
    // integral image with a zero border row/column
    let mut integral = vec![0u64; (h + 1) * (w + 1)];
    for r in 0..h {
        let mut row_sum = 0u64;
        for c in 0..w {
            let p = a.px[r * w + c];
            let q = b.clamped(r as i64 + dy as i64, c as i64 + dx as i64);
            row_sum += (0..3).map(|k| p[k].abs_diff(q[k]) as u64).sum::<u64>();
            integral[(r + 1) * (w + 1) + c + 1] = integral[r * (w + 1) + c + 1] + row_sum;
        }
    }
    let half = (WINDOW / 2) as i64;
    let mut out = vec![0u64; h * w];
    for r in 0..h {
        let r0 = (r as i64 - half).max(0) as usize;
        let r1 = (r as i64 + half).min(h as i64) as usize;
        for c in 0..w {
            let c0 = (c as i64 - half).max(0) as usize;
            let c1 = (c as i64 + half).min(w as i64) as usize;
            out[r * w + c] = integral[r1 * (w + 1) + c1] + integral[r0 * (w + 1) + c0]
                - integral[r0 * (w + 1) + c1]
                - integral[r1 * (w + 1) + c0];
        }
    }
    out
}

#[inline]
fn better(cost: u64, d: (i32, i32), best_cost: u64, best: (i32, i32)) -> bool {
    let key = |c: u64, (dy, dx): (i32, i32)| (c, dy * dy + dx * dx, dy, dx);
    key(cost, d) < key(best_cost, best)
}

/// Best displacement per pixel among `prior(p) + δ`, `|δ| ≤ radius`.
fn match_level(a: &Plane, b: &Plane, prior: &[(i32, i32)], radius: i32) -> Vec<(i32, i32)> {
    let n = a.h * a.w;
    // Pixels grouped by the global displacements they need.
    let mut wanted: BTreeMap<(i32, i32), Vec<usize>> = BTreeMap::new();
    for (k, &(py, px)) in prior.iter().enumerate() {
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                wanted.entry((py + dy, px + dx)).or_default().push(k);
            }
        }
    }
    let maps: Vec<((i32, i32), Vec<u64>, &Vec<usize>)> = wanted
        .par_iter()
        .map(|(&d, pixels)| (d, sad_map(a, b, d.0, d.1), pixels))
        .collect();
    let mut best = vec![(u64::MAX, (0i32, 0i32)); n];
    for (d, costs, pixels) in &maps {
        for &k in pixels.iter() {
            let (bc, bd) = best[k];
            if better(costs[k], *d, bc, bd) {
                best[k] = (costs[k], *d);
            }
        }
    }
    best.into_iter().map(|(_, d)| d).collect()
}

/// Dense flow from `a` to `b`, as `(Δcol, Δrow)` per pixel.
pub fn estimate_flow(a: &Image, b: &Image) -> Result<FlowField, MetricsError> {
    if a.dims() != b.dims() {
        return Err(MetricsError::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    let (h, w) = a.dims();
    if h < WINDOW || w < WINDOW {
        return Err(MetricsError::TooSmall {
            height: h,
            width: w,
            minimum: WINDOW,
        });
    }
    let mut pyr_a = vec![Plane::from_image(a)];
    let mut pyr_b = vec![Plane::from_image(b)];
    for _ in 1..LEVELS {
        let na = pyr_a.last().unwrap().downsample();
        let nb = pyr_b.last().unwrap().downsample();
        pyr_a.push(na);
        pyr_b.push(nb);
    }

    let coarse = &pyr_a[LEVELS - 1];
    let mut flow = match_level(
        coarse,
        &pyr_b[LEVELS - 1],
        &vec![(0, 0); coarse.h * coarse.w],
        COARSE_RADIUS,
    );
    for level in (0..LEVELS - 1).rev() {
        let (fa, fb) = (&pyr_a[level], &pyr_b[level]);
        let up = &pyr_a[level + 1];
        let prior: Vec<(i32, i32)> = (0..fa.h * fa.w)
            .map(|k| {
                let (r, c) = (k / fa.w, k % fa.w);
                let (cr, cc) = ((r / 2).min(up.h - 1), (c / 2).min(up.w - 1));
                let (dy, dx) = flow[cr * up.w + cc];
                (2 * dy, 2 * dx)
            })
            .collect();
        flow = match_level(fa, fb, &prior, REFINE_RADIUS);
    }

    let mut field = FlowField::zeros(h, w, true);
    for (out, (dy, dx)) in field.flow.iter_mut().zip(flow) {
        *out = [dx as f64, dy as f64];
    }
    Ok(field)
}
