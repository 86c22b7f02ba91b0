#![allow(dead_code)]

use std::path::{Path, PathBuf};

use omnicount_cli::commands::synth::{cmd_synth, SYNTH_CONFIG};
use omnicount_cli::config::SceneConfig;
use omnicount_cli::dataset::Dataset;
use omnicount_core::synth::{Movement, SyntheticScene};

pub const ORACLE: &str = env!("CARGO_BIN_EXE_omnicount-oracle");
pub const OMNICOUNT: &str = env!("CARGO_BIN_EXE_omnicount");

pub fn scene(persons: usize, movement: Movement, size: usize) -> SyntheticScene {
    SyntheticScene {
        persons,
        movement,
        size,
        seed: 5,
        ..Default::default()
    }
}

/// Renders a scene into `dir` and loads its generated config.
pub fn render(dir: &Path, scene: &SyntheticScene, frames: usize) -> (SceneConfig, Dataset) {
    cmd_synth(scene, frames, dir, Some(Path::new(ORACLE))).unwrap();
    let cfg = SceneConfig::load(&dir.join(SYNTH_CONFIG)).unwrap();
    (cfg, Dataset::open(dir).unwrap())
}

/// A dataset that shows the same rendered frame `frames` times.
pub fn render_static(dir: &Path, scene: &SyntheticScene, frames: usize) -> (SceneConfig, Dataset) {
    let (cfg, mut ds) = render(dir, scene, 1);
    ds.frames = vec![ds.frames[0].clone(); frames];
    ds.ground_truth = None;
    (cfg, ds)
}

/// One-line `sh -c` provider.
pub fn shell_provider(name: &str, script: &str, timeout: f64) -> omnicount_cli::config::ProviderConfig {
    let toml = format!(
        "name = {name:?}\nkind = \"box-detector\"\ncommand = [\"sh\", \"-c\", {script:?}]\nk = 3\ntimeout = {timeout:?}\n"
    );
    toml::from_str(&toml).unwrap()
}

pub fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}
