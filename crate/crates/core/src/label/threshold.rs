use serde::{Deserialize, Serialize};

use crate::eval::{f1, MatchSample, Verdict};

use super::LabelError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub threshold: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Score threshold with the best F1, where a detection counts when its score
/// is at least the threshold. Candidates are the distinct sample scores; on
/// a tie the higher threshold wins. `false_negatives` are ground truths no
/// detection matched.
pub fn select_threshold_f1(samples: &[MatchSample], false_negatives: usize) -> Result<ThresholdChoice, LabelError> {
    if samples.is_empty() {
        return Err(LabelError::NoSamples);
    }
    let mut sorted: Vec<&MatchSample> = samples.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));
    let total_gt = sorted.iter().filter(|s| s.verdict == Verdict::Tp).count() + false_negatives;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best: Option<ThresholdChoice> = None;
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
        let score = f1(precision, recall);
        // Strictly better only: earlier candidates have higher thresholds.
        if best.is_none_or(|b| score > b.f1) {
            best = Some(ThresholdChoice {
                threshold,
                f1: score,
                precision,
                recall,
            });
        }
    }
    Ok(best.expect("at least one candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(score: f64, tp: bool) -> MatchSample {
        MatchSample {
            score,
            verdict: if tp { Verdict::Tp } else { Verdict::Fp },
            frame_index: 0,
        }
    }

    #[test]
    fn separable_scores() {
        let samples = [s(0.9, true), s(0.6, true), s(0.5, false), s(0.2, false)];
        let c = select_threshold_f1(&samples, 0).unwrap();
        assert_eq!((c.threshold, c.f1), (0.6, 1.0));
    }

    #[test]
    fn only_false_positives_picks_highest_score() {
        let c = select_threshold_f1(&[s(0.3, false), s(0.8, false)], 2).unwrap();
        assert_eq!((c.threshold, c.f1), (0.8, 0.0));
    }

    #[test]
    fn tie_goes_to_higher_threshold() {
        // 0.9: P=1, R=1/2 → 2/3; 0.5: P=2/4, R=1 → 2/3.
        let samples = [s(0.9, true), s(0.5, true), s(0.5, false), s(0.5, false)];
        let c = select_threshold_f1(&samples, 0).unwrap();
        assert_eq!(c.threshold, 0.9);
    }

    #[test]
    fn no_samples() {
        assert!(matches!(select_threshold_f1(&[], 1), Err(LabelError::NoSamples)));
    }
}
