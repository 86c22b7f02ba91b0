use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use omnicount_core::frame::save_frame;
use omnicount_core::geometry::OmniCameraModel;
use omnicount_core::label::{read_annotations, write_annotations, FrameAnnotation, NormBox};
use omnicount_core::temporal::Degrader;
use serde::Serialize;

use super::{degrade_frame, degraded_camera, scene_camera};
use crate::config::SceneConfig;
use crate::dataset::{Dataset, DatasetManifest, GROUND_TRUTH};

pub const DEGRADED_CONFIG: &str = "scene.toml";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegradeSummary {
    pub frames: usize,
    /// Frames produced before the ring held enough history, reconstructed
    /// linearly from the newest frame alone.
    pub warmup_frames: usize,
    pub net_res: usize,
    pub camera: Option<OmniCameraModel>,
}

/// Moves normalised coordinates from the full frame into the square crop.
fn crop_annotation(ann: &FrameAnnotation, camera: &OmniCameraModel) -> FrameAnnotation {
    let (x0, y0, side) = camera.square_crop();
    let (w, h, s) = (camera.image_width as f64, camera.image_height as f64, side as f64);
    let px = |v: f64, full: f64, off: i64| (v * full - off as f64) / s;
    let mut out = ann.clone();
    out.boxes = ann
        .boxes
        .iter()
        .map(|b| {
            let mut pixels = b.to_pixels(camera.image_width, camera.image_height);
            pixels.x -= x0 as f64;
            pixels.y -= y0 as f64;
            NormBox::from_pixels(&pixels, side, side)
        })
        .collect();
    out.points = ann
        .points
        .as_ref()
        .map(|ps| ps.iter().map(|[x, y]| [px(*x, w, x0), px(*y, h, y0)]).collect());
    out
}

/// Degrades a dataset with a scale plan and writes the reconstructions as
/// a new dataset with its own scene config and ground truth.
pub fn cmd_degrade(cfg: &SceneConfig, ds: &Dataset, plan_name: &str, out_dir: &Path) -> Result<DegradeSummary> {
    let plan = cfg.plan(plan_name)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut degrader = Degrader::new(plan.clone(), cfg.fps)?;
    let history = plan.history();
    let mut camera = None;
    let mut files: Vec<PathBuf> = Vec::with_capacity(ds.len());
    for frame in ds.iter_frames(cfg.fps) {
        let frame = frame?;
        let cam = match camera {
            Some(c) => c,
            None => *camera.insert(scene_camera(cfg, frame.width(), frame.height())?),
        };
        let out = degrade_frame(&mut degrader, &cam, &frame)?;
        let ext = if out.channels() == 1 { "pgm" } else { "ppm" };
        let name = PathBuf::from(format!("frame_{:05}.{ext}", frame.index));
        save_frame(&out_dir.join(&name), &out)?;
        files.push(name);
    }
    let out_cam = camera.or(cfg.camera).map(|c| degraded_camera(&c, plan.net_res));

    let ground_truth = match (&ds.ground_truth, camera) {
        (Some(gt), Some(source_cam)) => {
            let anns: Vec<FrameAnnotation> = read_annotations(gt)?
                .iter()
                .map(|a| crop_annotation(a, &source_cam))
                .collect();
            write_annotations(&anns, &out_dir.join(GROUND_TRUTH))?;
            Some(PathBuf::from(GROUND_TRUTH))
        }
        _ => None,
    };
    DatasetManifest {
        frames: files.clone(),
        ground_truth,
        split: ds.split.clone(),
    }
    .save(out_dir)?;

    let mut derived = cfg.clone();
    derived.camera = out_cam;
    derived.kernels_file = None;
    derived.map_cache = None;
    derived.count.plan = None;
    derived.providers.iter_mut().for_each(|p| {
        p.spec.command = super::resolve_command(cfg, &p.spec.command);
    });
    derived.save(&out_dir.join(DEGRADED_CONFIG))?;

    let summary = DegradeSummary {
        frames: files.len(),
        warmup_frames: files.len().min(history - 1),
        net_res: plan.net_res,
        camera: out_cam,
    };
    info!("degraded {} frames with plan {plan_name:?}", summary.frames);
    Ok(summary)
}
