use std::path::Path;

use anyhow::{Context, Result};
use log::info;
use omnicount_core::frame::{save_frame, OmniFrame};
use omnicount_core::geometry::unwarp_frame;

use super::scene_camera;
use crate::config::SceneConfig;
use crate::dataset::Dataset;
use crate::maps::fragment_maps;

/// Grey fragments are widened to RGB so every file really is a PPM.
fn as_rgb(frame: OmniFrame) -> OmniFrame {
    if frame.channels() == 3 {
        return frame;
    }
    let data = frame.data().iter().flat_map(|&v| [v, v, v]).collect();
    OmniFrame::new(frame.width(), frame.height(), 3, data)
        .expect("rgb buffer")
        .with_stamp(frame.index, frame.timestamp)
}

/// Writes `fragment_<frame>_<i>.ppm` for every frame and fragment. Uses the
/// named provider's unwarp settings, else the first provider's, else the
/// defaults. Returns the number of files written.
pub fn cmd_unwarp(cfg: &SceneConfig, ds: &Dataset, provider: Option<&str>, out_dir: &Path) -> Result<usize> {
    let unwarp = match provider {
        Some(name) => cfg.provider(name)?.unwarp_config(),
        None => cfg.providers.first().map(|p| p.unwarp_config()).unwrap_or_default(),
    };
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let cache = cfg.map_cache.as_ref().map(|p| cfg.resolve(p));
    let mut maps = None;
    let mut written = 0;
    for frame in ds.iter_frames(cfg.fps) {
        let frame = frame?;
        let maps = match &maps {
            Some(m) => m,
            None => {
                let camera = scene_camera(cfg, frame.width(), frame.height())?;
                maps.insert(fragment_maps(&camera, &unwarp, cache.as_deref())?)
            }
        };
        for (i, map) in maps.iter().enumerate() {
            let fragment = as_rgb(unwarp_frame(&frame, map)?);
            save_frame(&out_dir.join(format!("fragment_{}_{i}.ppm", frame.index)), &fragment)?;
            written += 1;
        }
    }
    info!("wrote {written} fragments from {} frames", ds.len());
    Ok(written)
}
