pub mod annotate;
pub mod bench;
pub mod count;
pub mod degrade;
pub mod evaluate;
pub mod synth;
pub mod unwarp;

use std::path::{Path, PathBuf};

use anyhow::Result;
use omnicount_core::frame::OmniFrame;
use omnicount_core::geometry::{DetectionBox, FragmentMap, OmniCameraModel};
use omnicount_core::label::{
    fuse_to_omni, harvest_fragments, DetectionProvider, Harvest, LabelError, PoseBoxRule, ProcessProvider,
};
use omnicount_core::temporal::{upscale_linear, Degrader};

use crate::config::{ProviderConfig, SceneConfig};
use crate::error::{config_bail, ConfigError};
use crate::maps::fragment_maps;

/// Camera for a scene: the configured one, or a centred circle filling the
/// frame. Checks the frame size against it.
pub fn scene_camera(cfg: &SceneConfig, width: usize, height: usize) -> Result<OmniCameraModel> {
    let cam = match cfg.camera {
        Some(c) => c,
        None => {
            let side = width.min(height) as f64;
            OmniCameraModel::centered(width, height, 0.1 * side, side / 2.0)
        }
    };
    if (cam.image_width, cam.image_height) != (width, height) {
        config_bail!(
            "camera is configured for {}x{} frames, dataset frames are {width}x{height}",
            cam.image_width,
            cam.image_height
        );
    }
    cam.validate().map_err(|e| ConfigError(e.to_string()))?;
    Ok(cam)
}

/// Bare program names are looked up next to the running executable first,
/// so sibling binaries work without being on `PATH`. Relative paths are
/// taken relative to the config file.
pub fn resolve_command(cfg: &SceneConfig, command: &[String]) -> Vec<String> {
    let mut out = command.to_vec();
    let Some(program) = out.first_mut() else {
        return out;
    };
    let path = PathBuf::from(&*program);
    if path.is_absolute() {
        return out;
    }
    if path.components().count() > 1 {
        *program = cfg.resolve(&path).display().to_string();
    } else if let Some(sibling) = std::env::current_exe()
        .ok()
        .and_then(|exe| exe.parent().map(|d| d.join(&path)))
        .filter(|p| p.is_file())
    {
        *program = sibling.display().to_string();
    }
    out
}

/// A running provider together with the fragment maps it works on.
pub struct ProviderRun {
    pub name: String,
    pub provider: Box<dyn DetectionProvider + Send>,
    pub maps: Vec<FragmentMap>,
    pub pose_rule: PoseBoxRule,
}

impl ProviderRun {
    pub fn new(
        pc: &ProviderConfig,
        provider: Box<dyn DetectionProvider + Send>,
        camera: &OmniCameraModel,
        cache: Option<&Path>,
    ) -> Result<Self> {
        Ok(Self {
            name: pc.spec.name.clone(),
            provider,
            maps: fragment_maps(camera, &pc.unwarp_config(), cache)?,
            pose_rule: pc.pose,
        })
    }
}

/// Starts every configured provider process for frames seen by `camera`.
pub fn spawn_providers(cfg: &SceneConfig, camera: &OmniCameraModel) -> Result<Vec<ProviderRun>> {
    if cfg.providers.is_empty() {
        config_bail!("no providers configured");
    }
    let cache = cfg.map_cache.as_ref().map(|p| cfg.resolve(p));
    cfg.providers
        .iter()
        .map(|pc| {
            let mut spec = pc.spec.clone();
            spec.command = resolve_command(cfg, &spec.command);
            let provider = ProcessProvider::spawn(spec)?;
            ProviderRun::new(pc, Box::new(provider), camera, cache.as_deref())
        })
        .collect()
}

/// Runs every provider on a frame and fuses the result on the omni image.
pub fn detect_frame(
    runs: &mut [ProviderRun],
    frame: &OmniFrame,
    nms_threshold: f64,
) -> Result<Vec<DetectionBox>, LabelError> {
    let mut harvested = Vec::with_capacity(runs.len());
    for run in runs.iter_mut() {
        harvested.push(harvest_fragments(frame, run.provider.as_mut(), &run.maps)?);
    }
    let harvests: Vec<Harvest<'_>> = runs
        .iter()
        .zip(&harvested)
        .map(|(run, dets)| Harvest {
            source: &run.name,
            maps: &run.maps,
            detections: dets,
            pose_rule: run.pose_rule,
        })
        .collect();
    let mut fused = fuse_to_omni(&harvests, nms_threshold);
    for b in &mut fused {
        b.frame_index = frame.index;
    }
    Ok(fused)
}

/// Crops a frame to the camera's square and runs it through the degrader.
/// Until the ring holds enough history the newest frame is upscaled
/// linearly, so every input frame yields an output.
pub fn degrade_frame(degrader: &mut Degrader, camera: &OmniCameraModel, frame: &OmniFrame) -> Result<OmniFrame> {
    let (x0, y0, side) = camera.square_crop();
    let square = frame.crop_square(x0, y0, side).with_stamp(frame.index, frame.timestamp);
    Ok(match degrader.process(&square)? {
        Some(out) => out,
        None => {
            let latest = degrader.ring().latest().expect("frame just pushed");
            upscale_linear(latest, degrader.plan().net_res)?.with_stamp(frame.index, frame.timestamp)
        }
    })
}

/// Camera model of frames produced by [`degrade_frame`].
pub fn degraded_camera(camera: &OmniCameraModel, net_res: usize) -> OmniCameraModel {
    let cropped = camera.cropped();
    cropped.resampled(cropped.image_width, net_res)
}
