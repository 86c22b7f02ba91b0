use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::mpsc::sync_channel;
use std::thread;

use anyhow::{Context, Result};
use log::{info, warn};
use omnicount_core::label::{write_annotations_to, FilterDecision, FrameAnnotation, NormBox};
use serde::Serialize;

use super::{detect_frame, scene_camera, spawn_providers, ProviderRun};
use crate::config::SceneConfig;
use crate::dataset::Dataset;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AnnotateSummary {
    pub frames: usize,
    pub accepted: usize,
    pub skipped: usize,
}

/// Pseudo-labels a dataset with the configured providers.
pub fn cmd_annotate(cfg: &SceneConfig, ds: &Dataset, out: &Path) -> Result<AnnotateSummary> {
    if ds.is_empty() {
        File::create(out).with_context(|| format!("creating {}", out.display()))?;
        return Ok(AnnotateSummary::default());
    }
    let first = ds.frame(0, cfg.fps)?;
    let camera = scene_camera(cfg, first.width(), first.height())?;
    let mut runs = spawn_providers(cfg, &camera)?;
    annotate_with(cfg, ds, &mut runs, out)
}

/// Same as [`cmd_annotate`] with providers supplied by the caller.
pub fn annotate_with(cfg: &SceneConfig, ds: &Dataset, runs: &mut [ProviderRun], out: &Path) -> Result<AnnotateSummary> {
    let mut writer = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    let mut filter = cfg.count_filter.state();
    let mut summary = AnnotateSummary::default();
    let (tx, rx) = sync_channel(4);
    let fps = cfg.fps;
    thread::scope(|scope| -> Result<()> {
        scope.spawn(move || {
            for (i, frame) in ds.iter_frames(fps).enumerate() {
                if tx.send((i, frame)).is_err() {
                    break;
                }
            }
        });
        for (i, frame) in rx {
            summary.frames += 1;
            let ts = i as f64 / fps;
            let fused = frame.and_then(|f| {
                let boxes = detect_frame(runs, &f, cfg.nms_threshold)?;
                Ok((f, boxes))
            });
            let ann = match fused {
                Ok((f, boxes)) => {
                    let accepted = filter.observe(boxes.len()) == FilterDecision::Accept;
                    summary.accepted += accepted as usize;
                    FrameAnnotation {
                        frame: i as u64,
                        ts,
                        accepted,
                        boxes: boxes
                            .iter()
                            .map(|b| NormBox::from_pixels(b, f.width(), f.height()))
                            .collect(),
                        points: None,
                        error: None,
                    }
                }
                Err(e) => {
                    warn!("frame {i} skipped: {e:#}");
                    summary.skipped += 1;
                    FrameAnnotation::skipped(i as u64, ts, format!("{e:#}"))
                }
            };
            write_annotations_to(&[ann], &mut writer)?;
        }
        Ok(())
    })?;
    writer.flush()?;
    info!(
        "annotated {} frames: {} accepted, {} skipped",
        summary.frames, summary.accepted, summary.skipped
    );
    Ok(summary)
}
