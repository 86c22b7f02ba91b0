use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use log::info;
use omnicount_core::eval::{
    count_report, evaluate, CountFrame, Evaluation, GroundTruth, MatchMode, PrRow, DEFAULT_IOU_MIN,
};
use omnicount_core::label::{read_annotations, select_threshold_f1, CountFilterState, FilterDecision, FrameAnnotation};
use serde::{Deserialize, Serialize};

use crate::config::CountFilterConfig;
use crate::error::config_bail;

/// Where the temporal count filter sits relative to threshold selection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FilterOrder {
    /// Evaluate only frames the annotator accepted, then pick the threshold.
    #[default]
    Before,
    /// Pick the threshold on every frame, then re-run the count filter on
    /// counts at that threshold and evaluate the frames it keeps.
    After,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluateOptions {
    pub mode: MatchMode,
    pub iou_min: f64,
    pub order: FilterOrder,
    /// Ignore the count filter and evaluate every non-skipped frame.
    pub all_frames: bool,
    /// Use this threshold instead of the best-F1 one.
    pub threshold: Option<f64>,
    pub count_filter: CountFilterConfig,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            mode: MatchMode::Point,
            iou_min: DEFAULT_IOU_MIN,
            order: FilterOrder::Before,
            all_frames: false,
            threshold: None,
            count_filter: CountFilterConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluateSummary {
    pub mode: MatchMode,
    pub order: FilterOrder,
    pub frames: usize,
    pub total_gt: usize,
    pub ap: f64,
    /// `None` when there were no detections at all.
    pub threshold: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub exact_match_rate: f64,
    pub mean_absolute_error: f64,
    pub max_error: usize,
}

pub const PR_CSV: &str = "pr.csv";
pub const COUNTS_CSV: &str = "counts.csv";
pub const SUMMARY_JSON: &str = "summary.json";

struct Paired<'a> {
    pred: &'a FrameAnnotation,
    truth: GroundTruth,
}

fn truth_of(gt: &FrameAnnotation, mode: MatchMode, path: &Path) -> Result<GroundTruth> {
    Ok(match mode {
        MatchMode::Point => match gt.pixel_points(1, 1) {
            Some(p) => GroundTruth::Points(p),
            None => config_bail!(
                "{}: frame {} has no head points; point mode needs \"points\" in the ground truth \
                 (use --mode iou for box-only ground truth)",
                path.display(),
                gt.frame
            ),
        },
        MatchMode::Iou => GroundTruth::Boxes(gt.pixel_boxes(1, 1)),
    })
}

fn run(frames: &[Paired<'_>], opts: &EvaluateOptions) -> Result<Evaluation> {
    let input: Vec<_> = frames
        .iter()
        .map(|p| (p.pred.frame, p.pred.pixel_boxes(1, 1), p.truth.clone()))
        .collect();
    Ok(evaluate(&input, opts.mode, opts.iou_min)?)
}

fn choose_threshold(ev: &Evaluation, opts: &EvaluateOptions) -> Option<f64> {
    opts.threshold.or_else(|| {
        select_threshold_f1(&ev.samples, ev.false_negatives)
            .ok()
            .map(|c| c.threshold)
    })
}

/// Scores predictions against ground truth, both annotation files, and
/// writes `pr.csv`, `counts.csv` and `summary.json` into `out_dir`.
/// Coordinates are compared in normalised image units.
pub fn cmd_evaluate(pred: &Path, gt: &Path, opts: &EvaluateOptions, out_dir: &Path) -> Result<EvaluateSummary> {
    let preds = read_annotations(pred)?;
    let truth: BTreeMap<u64, FrameAnnotation> = read_annotations(gt)?.into_iter().map(|a| (a.frame, a)).collect();
    let mut paired = Vec::new();
    for p in preds.iter().filter(|p| !p.is_skipped()) {
        let Some(g) = truth.get(&p.frame) else { continue };
        paired.push(Paired {
            pred: p,
            truth: truth_of(g, opts.mode, gt)?,
        });
    }

    let (selected, threshold) = match (opts.all_frames, opts.order) {
        (true, _) => {
            let ev = run(&paired, opts)?;
            let t = choose_threshold(&ev, opts);
            (paired, t)
        }
        (false, FilterOrder::Before) => {
            let kept: Vec<Paired<'_>> = paired.into_iter().filter(|p| p.pred.accepted).collect();
            let ev = run(&kept, opts)?;
            let t = choose_threshold(&ev, opts);
            (kept, t)
        }
        (false, FilterOrder::After) => {
            let ev = run(&paired, opts)?;
            let t = choose_threshold(&ev, opts);
            let cut = t.unwrap_or(f64::INFINITY);
            let mut filter = CountFilterState::new(opts.count_filter.window, opts.count_filter.tolerance);
            let kept = paired
                .into_iter()
                .filter(|p| {
                    let n = p.pred.boxes.iter().filter(|b| b.score >= cut).count();
                    filter.observe(n) == FilterDecision::Accept
                })
                .collect();
            (kept, t)
        }
    };

    let ev = run(&selected, opts)?;
    let at = threshold.and_then(|t| ev.curve.rows.iter().rev().find(|r| r.threshold >= t).copied());
    let counts = count_report(
        &selected
            .iter()
            .map(|p| CountFrame {
                frame: p.pred.frame,
                detections: p.pred.pixel_boxes(1, 1),
                truth: p.truth.len(),
            })
            .collect::<Vec<_>>(),
        threshold.unwrap_or(f64::INFINITY),
        1.0,
    );

    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut pr = csv::Writer::from_path(out_dir.join(PR_CSV))?;
    for row in &ev.curve.rows {
        pr.serialize(row)?;
    }
    if ev.curve.rows.is_empty() {
        pr.write_record(["threshold", "tp", "fp", "precision", "recall", "f1"])?;
    }
    pr.flush()?;
    let mut cw = csv::Writer::from_path(out_dir.join(COUNTS_CSV))?;
    for row in &counts.rows {
        cw.serialize(row)?;
    }
    if counts.rows.is_empty() {
        cw.write_record(["frame", "predicted", "truth"])?;
    }
    cw.flush()?;

    let zero = PrRow {
        threshold: 0.0,
        tp: 0,
        fp: 0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    let op = at.unwrap_or(zero);
    let summary = EvaluateSummary {
        mode: opts.mode,
        order: opts.order,
        frames: selected.len(),
        total_gt: ev.curve.total_gt,
        ap: ev.ap,
        threshold,
        precision: op.precision,
        recall: op.recall,
        f1: op.f1,
        exact_match_rate: counts.exact_match_rate,
        mean_absolute_error: counts.mean_absolute_error,
        max_error: counts.max_error,
    };
    std::fs::write(out_dir.join(SUMMARY_JSON), serde_json::to_string_pretty(&summary)?)?;
    info!(
        "{} frames: AP {:.4}, F1 {:.4} at threshold {:?}",
        summary.frames, summary.ap, summary.f1, summary.threshold
    );
    Ok(summary)
}

/// Threshold recorded in a `summary.json` written by [`cmd_evaluate`].
pub fn threshold_from_summary(path: &Path) -> Result<f64> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let s: EvaluateSummary = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match s.threshold {
        Some(t) => Ok(t),
        None => config_bail!("{} records no threshold", path.display()),
    }
}
