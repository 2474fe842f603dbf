//! Evaluation metrics: flow agreement against ground truth, whole-frame and
//! masked pixel differences, PSNR and SSIM.

mod fidelity;
mod flow_estimator;
mod report;

pub use fidelity::{idiff, idiff_masked, psnr, ssim, MaskedIdiff, PSNR_CAP, SSIM_WINDOW};
pub use flow_estimator::{estimate_flow, BlockMatcher, FlowEstimator, LEVELS, WINDOW};
pub use report::{aggregate, write_csv, write_report_json, Aggregate, MetricReport};

use rayon::prelude::*;
use thiserror::Error;

use crate::error::IoError;
use crate::motion::FlowField;
use crate::raster::Image;

/// Default ground-truth magnitude threshold, in pixels.
pub const DEFAULT_TAU: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("image {height}x{width} is smaller than the {minimum}-pixel window")]
    TooSmall {
        height: usize,
        width: usize,
        minimum: usize,
    },
    #[error("video has {frames} frames but {flows} flow fields (need frames = flows + 1)")]
    FrameCount { frames: usize, flows: usize },
    #[error("no pixel has ground-truth flow magnitude >= {tau}")]
    NoMotion { tau: f64 },
    #[error("csv: {0}")]
    Csv(String),
}

impl MetricsError {
    pub fn is_io(&self) -> bool {
        matches!(self, Self::Io(_))
    }
}

/// Mean cosine similarity between estimated and ground-truth flow over all
/// pixels whose ground truth is valid with magnitude at least `tau`.
///
/// Per pair the cosine is averaged over qualifying pixels; the score is the
/// mean over pairs that have any. A zero estimate scores 0.
pub fn optflow_score(video: &[Image], ground_truth: &[FlowField], tau: f64) -> Result<f64, MetricsError> {
    optflow_score_with(&BlockMatcher, video, ground_truth, tau)
}

pub fn optflow_score_with(
    estimator: &dyn FlowEstimator,
    video: &[Image],
    ground_truth: &[FlowField],
    tau: f64,
) -> Result<f64, MetricsError> {
    if video.len() != ground_truth.len() + 1 || ground_truth.is_empty() {
        return Err(MetricsError::FrameCount {
            frames: video.len(),
            flows: ground_truth.len(),
        });
    }
    let dims = video[0].dims();
    for d in video.iter().map(Image::dims).chain(ground_truth.iter().map(|g| (g.height, g.width))) {
        if d != dims {
            return Err(MetricsError::DimensionMismatch { left: dims, right: d });
        }
    }
    let per_pair: Vec<Option<f64>> = (0..ground_truth.len())
        .into_par_iter()
        .map(|t| {
            let gt = &ground_truth[t];
            if !gt.flow.iter().zip(&gt.valid).any(|(g, &ok)| ok && qualifies(g, tau)) {
                return Ok(None);
            }
            let est = estimator.estimate(&video[t], &video[t + 1])?;
            let (mut sum, mut n) = (0.0, 0usize);
            for ((g, &ok), e) in gt.flow.iter().zip(&gt.valid).zip(&est.flow) {
                if ok && qualifies(g, tau) {
                    sum += cosine(e, g);
                    n += 1;
                }
            }
            Ok(Some(sum / n as f64))
        })
        .collect::<Result<_, MetricsError>>()?;
    let scores: Vec<f64> = per_pair.into_iter().flatten().collect();
    if scores.is_empty() {
        return Err(MetricsError::NoMotion { tau });
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

fn qualifies(g: &[f64; 2], tau: f64) -> bool {
    g[0].hypot(g[1]) >= tau
}

fn cosine(e: &[f64; 2], g: &[f64; 2]) -> f64 {
    let (ne, ng) = (e[0].hypot(e[1]), g[0].hypot(g[1]));
    if ne == 0.0 || ng == 0.0 {
        return 0.0;
    }
    (e[0] * g[0] + e[1] * g[1]) / (ne * ng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Grid;

    struct Fixed([f64; 2]);

    impl FlowEstimator for Fixed {
        fn estimate(&self, a: &Image, _: &Image) -> Result<FlowField, MetricsError> {
            let mut f = FlowField::zeros(a.height(), a.width(), true);
            f.flow.iter_mut().for_each(|v| *v = self.0);
            Ok(f)
        }
    }

    fn setup(gt_vec: [f64; 2]) -> (Vec<Image>, Vec<FlowField>) {
        let video = vec![Grid::filled(4, 4, [0u8; 3]); 3];
        let mut gt = FlowField::zeros(4, 4, true);
        gt.flow[5] = gt_vec;
        (video, vec![gt.clone(), gt])
    }

    #[test]
    fn cosine_cases() {
        let (v, gt) = setup([2.0, 0.0]);
        assert_eq!(optflow_score_with(&Fixed([1.0, 0.0]), &v, &gt, 0.5).unwrap(), 1.0);
        assert_eq!(optflow_score_with(&Fixed([-3.0, 0.0]), &v, &gt, 0.5).unwrap(), -1.0);
        assert_eq!(optflow_score_with(&Fixed([0.0, 0.0]), &v, &gt, 0.5).unwrap(), 0.0);
        assert!(optflow_score_with(&Fixed([0.0, 1.0]), &v, &gt, 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn below_threshold_is_an_error() {
        let (v, gt) = setup([0.3, 0.0]);
        assert!(matches!(
            optflow_score_with(&Fixed([1.0, 0.0]), &v, &gt, 0.5),
            Err(MetricsError::NoMotion { .. })
        ));
    }

    #[test]
    fn frame_count_checked() {
        let (v, gt) = setup([2.0, 0.0]);
        assert!(optflow_score_with(&Fixed([1.0, 0.0]), &v[..2], &gt, 0.5).is_err());
    }
}
