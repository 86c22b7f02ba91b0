use serde::{Deserialize, Serialize};

use crate::geometry::{DetectionBox, Point2};

use super::LabelError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub point: Point2,
    pub confidence: f64,
}

impl Keypoint {
    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Self {
            point: Point2::new(x, y),
            confidence,
        }
    }
}

/// Keypoints of one person as reported by a pose estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseDetection {
    pub keypoints: Vec<Keypoint>,
    pub fragment_index: usize,
}

impl PoseDetection {
    pub fn confident(&self, min_confidence: f64) -> impl Iterator<Item = &Keypoint> {
        self.keypoints.iter().filter(move |k| k.confidence >= min_confidence)
    }
}

/// How a pose becomes a box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseBoxRule {
    /// Keypoints below this confidence are ignored.
    pub min_confidence: f64,
    /// Margin added on every side, as a fraction of the box diagonal.
    pub expand: f64,
}

impl Default for PoseBoxRule {
    fn default() -> Self {
        Self {
            min_confidence: 0.1,
            expand: 0.1,
        }
    }
}

/// Tightest box over the confident keypoints, grown by `expand` times its
/// diagonal on each side and floored at 1×1 px. Scores the mean confidence
/// of the keypoints used.
pub fn pose_to_box(pose: &PoseDetection, rule: &PoseBoxRule) -> Result<DetectionBox, LabelError> {
    let used: Vec<&Keypoint> = pose.confident(rule.min_confidence).collect();
    if used.is_empty() {
        return Err(LabelError::NoConfidentKeypoints(rule.min_confidence));
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in &used {
        x0 = x0.min(k.point.x);
        y0 = y0.min(k.point.y);
        x1 = x1.max(k.point.x);
        y1 = y1.max(k.point.y);
    }
    let margin = rule.expand * (x1 - x0).hypot(y1 - y0);
    let (mut w, mut h) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    w = w.max(1.0);
    h = h.max(1.0);
    let score = used.iter().map(|k| k.confidence).sum::<f64>() / used.len() as f64;
    let mut b = DetectionBox::new(cx - w / 2.0, cy - h / 2.0, w, h, score);
    b.fragment = Some(pose.fragment_index);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(kps: &[(f64, f64, f64)]) -> PoseDetection {
        PoseDetection {
            keypoints: kps.iter().map(|&(x, y, c)| Keypoint::new(x, y, c)).collect(),
            fragment_index: 1,
        }
    }

    #[test]
    fn single_keypoint_gives_floor_box() {
        let b = pose_to_box(&pose(&[(4.0, 7.0, 0.9)]), &PoseBoxRule::default()).unwrap();
        assert_eq!((b.x, b.y, b.w, b.h, b.score), (3.5, 6.5, 1.0, 1.0, 0.9));
        assert_eq!(b.fragment, Some(1));
    }

    #[test]
    fn two_keypoints() {
        let b = pose_to_box(&pose(&[(0.0, 0.0, 0.8), (10.0, 10.0, 0.6)]), &PoseBoxRule::default()).unwrap();
        let m = 0.1 * 200f64.sqrt();
        assert!((b.x + m).abs() < 1e-12 && (b.y + m).abs() < 1e-12);
        assert!((b.w - (10.0 + 2.0 * m)).abs() < 1e-12 && (b.h - (10.0 + 2.0 * m)).abs() < 1e-12);
        assert!((b.score - 0.7).abs() < 1e-12);
    }

    #[test]
    fn weak_keypoints_are_ignored() {
        let b = pose_to_box(&pose(&[(0.0, 0.0, 0.05), (10.0, 10.0, 0.5)]), &PoseBoxRule::default()).unwrap();
        assert_eq!((b.x, b.y, b.score), (9.5, 9.5, 0.5));
        let err = pose_to_box(&pose(&[(0.0, 0.0, 0.05), (1.0, 1.0, 0.09)]), &PoseBoxRule::default());
        assert!(matches!(err, Err(LabelError::NoConfidentKeypoints(_))));
    }
}
