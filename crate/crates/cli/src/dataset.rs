//! Datasets on disk: a directory of frame files, optionally described by a
//! `manifest.toml`:
//!
//! ```toml
//! frames = ["frame_00000.pgm", "frame_00001.pgm"]
//! ground_truth = "ground_truth.jsonl"
//! split = "test"
//! ```
//!
//! Without a manifest every PGM/PPM/PNG file in the directory is a frame, in
//! file-name order, and `ground_truth.jsonl` is picked up if present.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use omnicount_core::frame::{is_frame_file, load_frame, OmniFrame};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.toml";
pub const GROUND_TRUTH: &str = "ground_truth.jsonl";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub frames: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

impl DatasetManifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST);
        std::fs::write(&path, toml::to_string_pretty(self)?).with_context(|| format!("writing {}", path.display()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub frames: Vec<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub split: Option<String>,
}

impl Dataset {
    pub fn open(root: &Path) -> Result<Self> {
        let manifest_path = root.join(MANIFEST);
        let manifest = if manifest_path.is_file() {
            let text = std::fs::read_to_string(&manifest_path)
                .with_context(|| format!("reading {}", manifest_path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", manifest_path.display()))?
        } else {
            if !root.is_dir() {
                bail!("dataset directory {} does not exist", root.display());
            }
            let gt = root.join(GROUND_TRUTH);
            DatasetManifest {
                frames: list_frame_files(root)?,
                ground_truth: gt.is_file().then(|| PathBuf::from(GROUND_TRUTH)),
                split: None,
            }
        };
        let abs = |p: &PathBuf| if p.is_absolute() { p.clone() } else { root.join(p) };
        let frames: Vec<PathBuf> = manifest.frames.iter().map(abs).collect();
        if let Some(missing) = frames.iter().find(|p| !p.is_file()) {
            bail!("frame file {} not found", missing.display());
        }
        Ok(Self {
            root: root.to_path_buf(),
            frames,
            ground_truth: manifest.ground_truth.as_ref().map(abs),
            split: manifest.split,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Loads frame `i`, stamped with its index and `i / fps`.
    pub fn frame(&self, i: usize, fps: f64) -> Result<OmniFrame> {
        let path = &self.frames[i];
        let frame = load_frame(path)?;
        Ok(frame.with_stamp(i as u64, i as f64 / fps))
    }

    /// Loads every frame in order, checking they share dimensions.
    pub fn iter_frames(&self, fps: f64) -> impl Iterator<Item = Result<OmniFrame>> + '_ {
        let mut dims = None;
        (0..self.len()).map(move |i| {
            let f = self.frame(i, fps)?;
            match dims {
                None => dims = Some(f.dims()),
                Some(d) if d != f.dims() => {
                    bail!(
                        "{} is {:?}, earlier frames are {:?}",
                        self.frames[i].display(),
                        f.dims(),
                        d
                    )
                }
                Some(_) => {}
            }
            Ok(f)
        })
    }
}

/// Frame files in a directory, sorted by name.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_frame_file(p))
        .map(|p| p.file_name().map(PathBuf::from).unwrap_or(p))
        .collect();
    files.sort();
    Ok(files)
}
