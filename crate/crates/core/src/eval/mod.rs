//! Evaluation: point-in-box and IoU matching, PR curves, average precision
//! and count-by-detection reports.

mod count;
mod curve;
mod matching;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DetectionBox, Point2};

pub use count::{count_report, CountFrame, CountReport, CountRow};
pub use curve::{average_precision, pr_curve, PrCurve, PrRow};
pub use matching::{match_iou, match_points, FrameMatch, MatchSample, Verdict};

pub(crate) use curve::f1;

/// IoU needed for a box match.
pub const DEFAULT_IOU_MIN: f64 = 0.4;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no detections to evaluate")]
    NoSamples,
    #[error("point evaluation needs head-point ground truth; frame {0} only has boxes")]
    MissingPoints(u64),
    #[error("IoU evaluation needs box ground truth; frame {0} only has head points")]
    MissingBoxes(u64),
}

/// Per-frame ground truth: head points or boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GroundTruth {
    Points(Vec<Point2>),
    Boxes(Vec<DetectionBox>),
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        match self {
            GroundTruth::Points(p) => p.len(),
            GroundTruth::Boxes(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Point,
    Iou,
}

/// Pooled evaluation over a stream of frames.
#[derive(Clone, Debug, Default)]
pub struct Evaluation {
    pub samples: Vec<MatchSample>,
    pub false_negatives: usize,
    pub curve: PrCurve,
    pub ap: f64,
}

/// Matches every frame, pools the samples and builds the PR curve.
/// Each mode needs the matching kind of ground truth on every frame.
pub fn evaluate(
    frames: &[(u64, Vec<DetectionBox>, GroundTruth)],
    mode: MatchMode,
    iou_min: f64,
) -> Result<Evaluation, EvalError> {
    let mut samples = Vec::new();
    let mut false_negatives = 0;
    for (frame, dets, gt) in frames {
        let m = match (mode, gt) {
            (MatchMode::Point, GroundTruth::Points(p)) => match_points(dets, p, *frame),
            (MatchMode::Point, GroundTruth::Boxes(_)) => return Err(EvalError::MissingPoints(*frame)),
            (MatchMode::Iou, GroundTruth::Boxes(b)) => match_iou(dets, b, iou_min, *frame),
            (MatchMode::Iou, GroundTruth::Points(_)) => return Err(EvalError::MissingBoxes(*frame)),
        };
        false_negatives += m.false_negatives;
        samples.extend(m.samples);
    }
    let curve = match pr_curve(&samples, false_negatives) {
        Ok(c) => c,
        Err(EvalError::NoSamples) => PrCurve {
            rows: Vec::new(),
            total_gt: false_negatives,
        },
        Err(e) => return Err(e),
    };
    let ap = average_precision(&curve);
    Ok(Evaluation {
        samples,
        false_negatives,
        curve,
        ap,
    })
}
