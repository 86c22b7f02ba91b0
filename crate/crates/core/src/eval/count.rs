use serde::{Deserialize, Serialize};

use crate::geometry::{nms, DetectionBox};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub frame: u64,
    pub predicted: usize,
    pub truth: usize,
}

impl CountRow {
    pub fn error(&self) -> usize {
        self.predicted.abs_diff(self.truth)
    }
}

/// Count-by-detection quality over a stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub rows: Vec<CountRow>,
    /// Fraction of frames whose count is exactly right (0 for an empty stream).
    pub exact_match_rate: f64,
    pub mean_absolute_error: f64,
    pub max_error: usize,
}

impl CountReport {
    pub fn from_rows(rows: Vec<CountRow>) -> Self {
        let n = rows.len();
        let (exact_match_rate, mean_absolute_error) = if n == 0 {
            (0.0, 0.0)
        } else {
            let exact = rows.iter().filter(|r| r.error() == 0).count();
            let total: usize = rows.iter().map(CountRow::error).sum();
            (exact as f64 / n as f64, total as f64 / n as f64)
        };
        let max_error = rows.iter().map(CountRow::error).max().unwrap_or(0);
        Self {
            rows,
            exact_match_rate,
            mean_absolute_error,
            max_error,
        }
    }
}

/// Detections of one frame alongside its true head count.
#[derive(Clone, Debug, PartialEq)]
pub struct CountFrame {
    pub frame: u64,
    pub detections: Vec<DetectionBox>,
    pub truth: usize,
}

/// Counts detections scoring at least `score_threshold` after NMS.
pub fn count_report(frames: &[CountFrame], score_threshold: f64, nms_threshold: f64) -> CountReport {
    let rows = frames
        .iter()
        .map(|f| CountRow {
            frame: f.frame,
            predicted: nms(&f.detections, nms_threshold)
                .iter()
                .filter(|d| d.score >= score_threshold)
                .count(),
            truth: f.truth,
        })
        .collect();
    CountReport::from_rows(rows)
}
