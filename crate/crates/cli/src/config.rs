//! Per-scene TOML configuration.
//!
//! ```toml
//! fps = 15.0
//! nms_threshold = 0.4
//! map_cache = "maps"
//!
//! [camera]
//! center_x = 255.5
//! center_y = 255.5
//! radius_inner = 61.44
//! radius_outer = 252.0
//! image_width = 512
//! image_height = 512
//!
//! [[providers]]
//! name = "yolo"
//! kind = "box-detector"
//! command = ["python3", "yolo_provider.py"]
//! k = 3
//! timeout = 10.0
//! workers = 2
//! unwarp = { overlap = 0.1, y_b = 1.0, fragment_height = 160 }
//!
//! [count_filter]
//! window = 15
//! tolerance = 0
//!
//! [[kernels]]
//! name = "wide"
//! cells = [[0, 2], [1, 3]]
//!
//! [[plans]]
//! name = "i32"
//! net_res = 160
//! scale_res = 32
//! mode = "interlaced"
//! kernel = "k2"
//! t = 2
//!
//! [count]
//! plan = "i32"
//! threshold = 0.5
//! every = 1
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use omnicount_core::geometry::{OmniCameraModel, UnwarpConfig};
use omnicount_core::label::{CountFilterState, PoseBoxRule, ProviderSpec, DEFAULT_NMS_THRESHOLD, DEFAULT_WINDOW_LEN};
use omnicount_core::temporal::{canonical_kernels, InterlacingKernel, KernelFile, ScalePlan};
use serde::{Deserialize, Serialize};

use crate::error::{config_bail, ConfigError};

fn default_fps() -> f64 {
    15.0
}

fn default_nms() -> f64 {
    DEFAULT_NMS_THRESHOLD
}

/// Unwarp settings of one provider; the fragment count comes from the
/// provider's `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnwarpSection {
    pub overlap: f64,
    pub y_b: f64,
    pub fragment_height: usize,
    pub fragment_width: Option<usize>,
}

impl Default for UnwarpSection {
    fn default() -> Self {
        let d = UnwarpConfig::default();
        Self {
            overlap: d.overlap,
            y_b: d.y_b,
            fragment_height: d.fragment_height,
            fragment_width: d.fragment_width,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    #[serde(flatten)]
    pub spec: ProviderSpec,
    #[serde(default)]
    pub unwarp: UnwarpSection,
    /// Pose estimators only: how keypoints become boxes.
    #[serde(default)]
    pub pose: PoseBoxRule,
}

impl ProviderConfig {
    pub fn unwarp_config(&self) -> UnwarpConfig {
        UnwarpConfig {
            k: self.spec.k,
            overlap: self.unwarp.overlap,
            y_b: self.unwarp.y_b,
            fragment_height: self.unwarp.fragment_height,
            fragment_width: self.unwarp.fragment_width,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountFilterConfig {
    pub window: usize,
    pub tolerance: usize,
}

impl Default for CountFilterConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW_LEN,
            tolerance: 0,
        }
    }
}

impl CountFilterConfig {
    pub fn state(&self) -> CountFilterState {
        CountFilterState::new(self.window, self.tolerance)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    Linear,
    Interlaced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanConfig {
    pub name: String,
    pub net_res: usize,
    pub scale_res: usize,
    pub mode: PlanMode,
    /// Kernel name, for interlaced plans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    /// Overrides the kernel's time-delta.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountConfig {
    /// Scale plan applied before detection; full resolution when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<String>,
    pub threshold: f64,
    /// Emit a record for every n-th frame.
    pub every: usize,
}

impl Default for CountConfig {
    fn default() -> Self {
        Self {
            plan: None,
            threshold: 0.5,
            every: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Derived from the first frame when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<OmniCameraModel>,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_nms")]
    pub nms_threshold: f64,
    #[serde(default)]
    pub providers: Vec<ProviderConfig>,
    #[serde(default)]
    pub count_filter: CountFilterConfig,
    #[serde(default)]
    pub kernels: Vec<InterlacingKernel>,
    /// Extra kernels in a `[[kernel]]` TOML file, relative to the config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernels_file: Option<PathBuf>,
    #[serde(default)]
    pub plans: Vec<PlanConfig>,
    #[serde(default)]
    pub count: CountConfig,
    /// Directory for cached fragment maps, relative to the config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_cache: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            camera: None,
            fps: default_fps(),
            nms_threshold: default_nms(),
            providers: Vec::new(),
            count_filter: CountFilterConfig::default(),
            kernels: Vec::new(),
            kernels_file: None,
            plans: Vec::new(),
            count: CountConfig::default(),
            map_cache: None,
            base_dir: PathBuf::from("."),
        }
    }
}

impl SceneConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: SceneConfig =
            toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(file) = cfg.kernels_file.clone() {
            let file = cfg.resolve(&file);
            let text = std::fs::read_to_string(&file)
                .map_err(|e| ConfigError(format!("cannot read kernels file {}: {e}", file.display())))?;
            let extra: KernelFile =
                toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", file.display())))?;
            cfg.kernels.extend(extra.kernels);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).context("serializing config")?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Resolves a path written in the config relative to the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            config_bail!("fps must be positive, got {}", self.fps);
        }
        if !(0.0..=1.0).contains(&self.nms_threshold) {
            config_bail!("nms_threshold {} outside [0, 1]", self.nms_threshold);
        }
        if let Some(cam) = &self.camera {
            cam.validate().map_err(|e| ConfigError(e.to_string()))?;
        }
        let mut names = std::collections::BTreeSet::new();
        for p in &self.providers {
            p.spec.validate().map_err(|e| ConfigError(e.to_string()))?;
            p.unwarp_config()
                .validate()
                .map_err(|e| ConfigError(format!("provider {}: {e}", p.spec.name)))?;
            if !names.insert(p.spec.name.as_str()) {
                config_bail!("duplicate provider name {:?}", p.spec.name);
            }
        }
        if self.count_filter.window == 0 {
            config_bail!("count_filter.window must be at least 1");
        }
        for k in &self.kernels {
            k.validate().map_err(|e| ConfigError(e.to_string()))?;
        }
        for p in &self.plans {
            self.plan(&p.name)?;
        }
        if let Some(name) = &self.count.plan {
            self.plan(name)?;
        }
        if self.count.every == 0 {
            config_bail!("count.every must be at least 1");
        }
        Ok(())
    }

    /// Shipped kernels plus the config's own; later definitions win.
    pub fn kernel_set(&self) -> BTreeMap<String, InterlacingKernel> {
        canonical_kernels()
            .into_iter()
            .chain(self.kernels.iter().cloned())
            .map(|k| (k.name.clone(), k))
            .collect()
    }

    pub fn plan(&self, name: &str) -> Result<ScalePlan> {
        let Some(p) = self.plans.iter().find(|p| p.name == name) else {
            config_bail!("unknown scale plan {name:?}");
        };
        let plan = match p.mode {
            PlanMode::Linear => ScalePlan::linear(p.net_res, p.scale_res),
            PlanMode::Interlaced => {
                let Some(kname) = &p.kernel else {
                    config_bail!("plan {name:?} is interlaced but names no kernel");
                };
                let Some(kernel) = self.kernel_set().remove(kname) else {
                    config_bail!("plan {name:?} references unknown kernel {kname:?}");
                };
                let kernel = match p.t {
                    Some(t) => kernel.with_t(t),
                    None => kernel,
                };
                ScalePlan::interlaced(p.net_res, p.scale_res, kernel)
            }
        };
        plan.map_err(|e| ConfigError(format!("plan {name:?}: {e}")).into())
    }

    pub fn provider(&self, name: &str) -> Result<&ProviderConfig> {
        match self.providers.iter().find(|p| p.spec.name == name) {
            Some(p) => Ok(p),
            None => config_bail!("unknown provider {name:?}"),
        }
    }
}
