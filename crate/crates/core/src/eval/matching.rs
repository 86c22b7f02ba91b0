//! Detection ↔ ground-truth matching.
//!
//! Both matchers visit detections in [`priority_order`], so the verdicts do
//! not depend on the order detections arrive in.

use serde::{Deserialize, Serialize};

use crate::geometry::{iou, priority_order, DetectionBox, Point2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Tp,
    Fp,
}

/// One scored detection after matching.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchSample {
    pub score: f64,
    pub verdict: Verdict,
    pub frame_index: u64,
}

/// Samples for one frame plus the ground truths nobody matched.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrameMatch {
    pub samples: Vec<MatchSample>,
    pub false_negatives: usize,
}

impl FrameMatch {
    pub fn true_positives(&self) -> usize {
        self.samples.iter().filter(|s| s.verdict == Verdict::Tp).count()
    }

    pub fn false_positives(&self) -> usize {
        self.samples.len() - self.true_positives()
    }
}

fn priority(dets: &[DetectionBox]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| priority_order(&dets[a], &dets[b]));
    order
}

fn finish(dets: &[DetectionBox], matched: &[bool], unmatched_gt: usize, frame_index: u64) -> FrameMatch {
    let samples = priority(dets)
        .into_iter()
        .map(|i| MatchSample {
            score: dets[i].score,
            verdict: if matched[i] { Verdict::Tp } else { Verdict::Fp },
            frame_index,
        })
        .collect();
    FrameMatch {
        samples,
        false_negatives: unmatched_gt,
    }
}

/// Point-in-box matching against head points.
///
/// Detections are visited by descending score. A detection takes the nearest
/// (to its centre) still-free head point it contains. If every point it
/// contains is already taken, an earlier detection is moved to another
/// point it also contains when that frees one up; earlier detections never
/// lose their match. This keeps the greedy score preference while reaching
/// the largest possible number of true positives.
pub fn match_points(dets: &[DetectionBox], heads: &[Point2], frame_index: u64) -> FrameMatch {
    // Candidate points per detection, nearest to the box centre first.
    let candidates: Vec<Vec<usize>> = dets
        .iter()
        .map(|d| {
            let c = d.center();
            let mut inside: Vec<usize> = (0..heads.len()).filter(|&p| d.contains(heads[p])).collect();
            inside.sort_by(|&a, &b| heads[a].dist(c).total_cmp(&heads[b].dist(c)).then(a.cmp(&b)));
            inside
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; heads.len()];
    let mut matched = vec![false; dets.len()];

    fn augment(det: usize, cand: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &p in &cand[det] {
            if seen[p] {
                continue;
            }
            seen[p] = true;
            let free = match owner[p] {
                None => true,
                Some(other) => augment(other, cand, owner, seen),
            };
            if free {
                owner[p] = Some(det);
                return true;
            }
        }
        false
    }

    for det in priority(dets) {
        if let Some(&p) = candidates[det].iter().find(|&&p| owner[p].is_none()) {
            owner[p] = Some(det);
            matched[det] = true;
        } else if !candidates[det].is_empty() {
            let mut seen = vec![false; heads.len()];
            matched[det] = augment(det, &candidates, &mut owner, &mut seen);
        }
    }
    let unmatched = owner.iter().filter(|o| o.is_none()).count();
    finish(dets, &matched, unmatched, frame_index)
}

/// IoU matching: each detection, by descending score, takes the free ground
/// truth with the highest IoU, provided it reaches `iou_min`.
pub fn match_iou(dets: &[DetectionBox], gts: &[DetectionBox], iou_min: f64, frame_index: u64) -> FrameMatch {
    let mut taken = vec![false; gts.len()];
    let mut matched = vec![false; dets.len()];
    for det in priority(dets) {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let v = iou(&dets[det], gt);
            if v >= iou_min && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            matched[det] = true;
        }
    }
    let unmatched = taken.iter().filter(|t| !**t).count();
    finish(dets, &matched, unmatched, frame_index)
}
