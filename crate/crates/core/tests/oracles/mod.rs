//! Slow reference implementations the library is checked against. Shared
//! with the CLI crate's acceptance suite.
#![allow(dead_code)]

use omnicount_core::eval::{MatchSample, Verdict};
use omnicount_core::geometry::{DetectionBox, Point2};

/// IoU from interval overlaps.
pub fn iou_ref(a: &DetectionBox, b: &DetectionBox) -> f64 {
    let overlap = |a0: f64, a1: f64, b0: f64, b1: f64| (a1.min(b1) - a0.max(b0)).max(0.0);
    let inter = overlap(a.x, a.x + a.w, b.x, b.x + b.w) * overlap(a.y, a.y + a.h, b.y, b.y + b.h);
    let union = a.w * a.h + b.w * b.h - inter;
    if inter <= 0.0 || union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Repeatedly keep the best remaining box and strike everything that
/// overlaps it too much. Scores must be distinct.
pub fn nms_ref(boxes: &[DetectionBox], threshold: f64) -> Vec<DetectionBox> {
    let mut remaining: Vec<DetectionBox> = boxes.to_vec();
    let mut kept = Vec::new();
    while !remaining.is_empty() {
        let best = (0..remaining.len())
            .max_by(|&i, &j| remaining[i].score.total_cmp(&remaining[j].score))
            .unwrap();
        let keep = remaining.swap_remove(best);
        remaining.retain(|b| iou_ref(&keep, b) <= threshold);
        kept.push(keep);
    }
    kept
}

fn counts_at(samples: &[MatchSample], t: f64) -> (usize, usize) {
    let tp = samples
        .iter()
        .filter(|s| s.score >= t && s.verdict == Verdict::Tp)
        .count();
    let fp = samples
        .iter()
        .filter(|s| s.score >= t && s.verdict == Verdict::Fp)
        .count();
    (tp, fp)
}

/// (threshold, precision, recall) at every distinct score.
pub fn operating_points(samples: &[MatchSample], false_negatives: usize) -> Vec<(f64, f64, f64)> {
    let total_gt = samples.iter().filter(|s| s.verdict == Verdict::Tp).count() + false_negatives;
    let mut thresholds: Vec<f64> = samples.iter().map(|s| s.score).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    thresholds
        .into_iter()
        .map(|t| {
            let (tp, fp) = counts_at(samples, t);
            let p = tp as f64 / (tp + fp) as f64;
            let r = if total_gt == 0 {
                0.0
            } else {
                tp as f64 / total_gt as f64
            };
            (t, p, r)
        })
        .collect()
}

/// Area under the interpolated PR curve: each recall step is weighted by the
/// best precision reachable at that recall or beyond.
pub fn ap_ref(samples: &[MatchSample], false_negatives: usize) -> f64 {
    let pts = operating_points(samples, false_negatives);
    let mut recalls: Vec<f64> = pts.iter().map(|p| p.2).collect();
    recalls.sort_by(f64::total_cmp);
    recalls.dedup();
    let mut ap = 0.0;
    let mut prev = 0.0;
    for r in recalls {
        let best = pts.iter().filter(|p| p.2 >= r).map(|p| p.1).fold(0.0, f64::max);
        ap += (r - prev) * best;
        prev = r;
    }
    ap
}

pub fn f1_ref(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Best-F1 threshold by scanning every candidate; the highest threshold
/// among equal F1 values wins.
pub fn best_threshold_ref(samples: &[MatchSample], false_negatives: usize) -> (f64, f64) {
    let scored: Vec<(f64, f64)> = operating_points(samples, false_negatives)
        .into_iter()
        .map(|(t, p, r)| (t, f1_ref(p, r)))
        .collect();
    let best_f1 = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let t = scored
        .iter()
        .filter(|s| s.1 == best_f1)
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    (t, best_f1)
}

/// Maximum number of (detection, point) pairs with the point inside the
/// detection, each used once. Exhaustive over point subsets.
pub fn optimal_point_matches(dets: &[DetectionBox], heads: &[Point2]) -> usize {
    assert!(heads.len() <= 16);
    let inside = |d: &DetectionBox, p: &Point2| p.x >= d.x && p.x <= d.x + d.w && p.y >= d.y && p.y <= d.y + d.h;
    let states = 1usize << heads.len();
    // best[mask]: most matches so far that use exactly the points in `mask`.
    let mut best: Vec<Option<usize>> = vec![None; states];
    best[0] = Some(0);
    for d in dets {
        let mut next = best.clone();
        for (mask, v) in best.iter().enumerate() {
            let Some(v) = *v else { continue };
            for (p, head) in heads.iter().enumerate() {
                if mask & (1 << p) == 0 && inside(d, head) {
                    let m = mask | (1 << p);
                    next[m] = Some(next[m].map_or(v + 1, |old| old.max(v + 1)));
                }
            }
        }
        best = next;
    }
    best.into_iter().flatten().max().unwrap_or(0)
}
