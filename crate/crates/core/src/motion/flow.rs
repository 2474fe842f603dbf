use super::render::Correspondences;
use super::MotionError;

/// Dense flow: per pixel `(Δcol, Δrow)` in pixels plus a validity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub height: usize,
    pub width: usize,
    pub flow: Vec<[f64; 2]>,
    pub valid: Vec<bool>,
}

impl FlowField {
    pub fn zeros(height: usize, width: usize, valid: bool) -> Self {
        Self {
            height,
            width,
            flow: vec![[0.0; 2]; height * width],
            valid: vec![valid; height * width],
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Option<[f64; 2]> {
        let k = row * self.width + col;
        self.valid[k].then_some(self.flow[k])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Ground-truth flow from frame `t` to `t + 1`: at each pixel won by a point
/// at frame `t`, that point's projection difference. Static points give zero
/// flow; unhit pixels and points that leave the view are invalid.
pub fn ground_truth_flow(corr: &Correspondences, t: usize) -> Result<FlowField, MotionError> {
    if t + 1 >= corr.frame_count {
        return Err(MotionError::FrameOutOfRange {
            frame: t,
            frames: corr.frame_count,
        });
    }
    let zb = corr.zbuffer(t);
    let mut field = FlowField::zeros(corr.height, corr.width, false);
    for (k, owner) in zb.owner.iter().enumerate() {
        let Some((layer, point)) = *owner else { continue };
        if layer == 0 {
            field.valid[k] = true;
            continue;
        }
        let a = corr.projection(layer, point, t);
        let b = corr.projection(layer, point, t + 1);
        if let (Some(a), Some(b)) = (a, b) {
            field.flow[k] = [b.col - a.col, b.row - a.row];
            field.valid[k] = true;
        }
    }
    Ok(field)
}
