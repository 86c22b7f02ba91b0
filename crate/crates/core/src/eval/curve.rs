use serde::{Deserialize, Serialize};

use super::{EvalError, MatchSample, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrRow {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Operating points for every distinct score, highest threshold first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub rows: Vec<PrRow>,
    pub total_gt: usize,
}

impl PrCurve {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub(crate) fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Pools samples and sweeps the threshold over every distinct score.
/// `false_negatives` counts ground truths no detection matched at all.
pub fn pr_curve(samples: &[MatchSample], false_negatives: usize) -> Result<PrCurve, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::NoSamples);
    }
    let mut sorted: Vec<&MatchSample> = samples.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let total_tp = sorted.iter().filter(|s| s.verdict == Verdict::Tp).count();
    let total_gt = total_tp + false_negatives;
    let mut rows = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].score;
        while i < sorted.len() && sorted[i].score == threshold {
            match sorted[i].verdict {
                Verdict::Tp => tp += 1,
                Verdict::Fp => fp += 1,
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = if total_gt > 0 { tp as f64 / total_gt as f64 } else { 0.0 };
        rows.push(PrRow {
            threshold,
            tp,
            fp,
            precision,
            recall,
            f1: f1(precision, recall),
        });
    }
    Ok(PrCurve { rows, total_gt })
}

/// Area under the precision envelope (all-point interpolation).
pub fn average_precision(curve: &PrCurve) -> f64 {
    let n = curve.rows.len();
    if n == 0 {
        return 0.0;
    }
    // envelope[i] = max precision over rows i.. (rows at equal or higher recall).
    let mut envelope = vec![0.0; n];
    let mut best: f64 = 0.0;
    for i in (0..n).rev() {
        best = best.max(curve.rows[i].precision);
        envelope[i] = best;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (row, p) in curve.rows.iter().zip(envelope) {
        ap += (row.recall - prev_recall) * p;
        prev_recall = row.recall;
    }
    ap.clamp(0.0, 1.0)
}
