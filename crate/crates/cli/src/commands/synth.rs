use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::info;
use omnicount_core::frame::save_frame;
use omnicount_core::label::{write_annotations, FrameAnnotation, PoseBoxRule, ProviderKind, ProviderSpec};
use omnicount_core::synth::{SyntheticRenderer, SyntheticScene};

use crate::config::{PlanConfig, PlanMode, ProviderConfig, SceneConfig, UnwarpSection};
use crate::dataset::{DatasetManifest, GROUND_TRUTH};

/// Scene config written next to a rendered dataset.
pub const SYNTH_CONFIG: &str = "scene.toml";
pub const ORACLE_BIN: &str = "omnicount-oracle";

/// Scene config for a rendered scene: its camera, a box and a pose oracle
/// provider, and a linear and an interlaced scale plan at 32 px.
pub fn synthetic_config(scene: &SyntheticScene, oracle: &Path) -> SceneConfig {
    let unwarp = UnwarpSection {
        fragment_height: 64.max(scene.size * 5 / 16),
        ..Default::default()
    };
    let provider = |name: &str, kind: ProviderKind, k: usize| ProviderConfig {
        spec: ProviderSpec {
            name: name.into(),
            kind,
            command: vec![oracle.display().to_string()],
            k,
            timeout: 10.0,
            workers: 1,
        },
        unwarp,
        pose: PoseBoxRule::default(),
    };
    let plan = |name: &str, mode: PlanMode, kernel: Option<&str>| PlanConfig {
        name: name.into(),
        net_res: 160,
        scale_res: 32,
        mode,
        kernel: kernel.map(String::from),
        t: None,
    };
    SceneConfig {
        camera: Some(scene.camera()),
        fps: scene.fps,
        providers: vec![
            provider("oracle-boxes", ProviderKind::BoxDetector, 3),
            provider("oracle-pose", ProviderKind::PoseEstimator, 2),
        ],
        plans: vec![
            plan("linear32", PlanMode::Linear, None),
            plan("k2-32", PlanMode::Interlaced, Some("k2")),
        ],
        ..Default::default()
    }
}

/// Renders a synthetic scene as a dataset directory: frames, head-point and
/// box ground truth, a manifest and a ready-to-use scene config. `oracle`
/// is the provider program named in the config.
pub fn cmd_synth(scene: &SyntheticScene, frames: usize, out_dir: &Path, oracle: Option<&Path>) -> Result<usize> {
    let renderer = SyntheticRenderer::new(scene.clone())?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = Vec::with_capacity(frames);
    let mut truth: Vec<FrameAnnotation> = Vec::with_capacity(frames);
    for i in 0..frames as u64 {
        let name = PathBuf::from(format!("frame_{i:05}.pgm"));
        save_frame(&out_dir.join(&name), &renderer.render(i))?;
        files.push(name);
        truth.push(renderer.truth(i));
    }
    write_annotations(&truth, &out_dir.join(GROUND_TRUTH))?;
    DatasetManifest {
        frames: files,
        ground_truth: Some(PathBuf::from(GROUND_TRUTH)),
        split: Some("synthetic".into()),
    }
    .save(out_dir)?;
    let oracle = oracle.unwrap_or(Path::new(ORACLE_BIN));
    synthetic_config(scene, oracle).save(&out_dir.join(SYNTH_CONFIG))?;
    info!("rendered {frames} frames of {} people", scene.persons);
    Ok(frames)
}
