use serde::{Deserialize, Serialize};

use crate::frame::OmniFrame;

use super::resample::{downscale, upscale_linear, MIN_SCALE_RES};
use super::{FrameRing, InterlacingKernel, TemporalError};

/// Doubles the resolution of the newest ring frame by pulling each output
/// pixel from the frame its kernel cell names. No blending happens: every
/// output pixel is a copy of exactly one input pixel.
pub fn interlace(ring: &FrameRing, kernel: &InterlacingKernel) -> Result<OmniFrame, TemporalError> {
    let needed = kernel.max_age() + 1;
    if ring.len() < needed {
        return Err(TemporalError::InsufficientHistory {
            needed,
            available: ring.len(),
        });
    }
    let current = ring.latest().expect("non-empty ring");
    let (w, h, ch) = current.dims();
    let src = |di: usize, dj: usize| {
        ring.frame_at_age(kernel.age(di, dj))
            .expect("history checked above")
            .data()
    };
    let cells = [[src(0, 0), src(0, 1)], [src(1, 0), src(1, 1)]];
    let ow = 2 * w;
    let mut out = vec![0u8; ow * 2 * h * ch];
    for i in 0..h {
        for (di, row_src) in cells.iter().enumerate() {
            let orow = (2 * i + di) * ow;
            for j in 0..w {
                let s = (i * w + j) * ch;
                for (dj, frame) in row_src.iter().enumerate() {
                    let d = (orow + 2 * j + dj) * ch;
                    out[d..d + ch].copy_from_slice(&frame[s..s + ch]);
                }
            }
        }
    }
    Ok(OmniFrame::new(ow, 2 * h, ch, out)
        .expect("interlace buffer")
        .with_stamp(current.index, current.timestamp))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "kernel")]
pub enum ScaleMode {
    Linear,
    Interlaced(InterlacingKernel),
}

/// Privacy resolution, detector resolution and the reconstruction between them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalePlan {
    pub net_res: usize,
    pub scale_res: usize,
    pub mode: ScaleMode,
}

impl ScalePlan {
    pub fn linear(net_res: usize, scale_res: usize) -> Result<Self, TemporalError> {
        let plan = Self {
            net_res,
            scale_res,
            mode: ScaleMode::Linear,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn interlaced(net_res: usize, scale_res: usize, kernel: InterlacingKernel) -> Result<Self, TemporalError> {
        let plan = Self {
            net_res,
            scale_res,
            mode: ScaleMode::Interlaced(kernel),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), TemporalError> {
        if self.scale_res < MIN_SCALE_RES {
            return Err(TemporalError::InvalidPlan(format!(
                "scale_res {} below {MIN_SCALE_RES}",
                self.scale_res
            )));
        }
        if self.scale_res > self.net_res {
            return Err(TemporalError::InvalidPlan(format!(
                "scale_res {} exceeds net_res {}",
                self.scale_res, self.net_res
            )));
        }
        if let ScaleMode::Interlaced(k) = &self.mode {
            k.validate()?;
            if self.net_res < 2 * self.scale_res {
                return Err(TemporalError::InvalidPlan(format!(
                    "interlacing doubles {}px to {}px, more than net_res {}",
                    self.scale_res,
                    2 * self.scale_res,
                    self.net_res
                )));
            }
        }
        Ok(())
    }

    /// Ring length needed before the plan can run.
    pub fn history(&self) -> usize {
        match &self.mode {
            ScaleMode::Linear => 1,
            ScaleMode::Interlaced(k) => k.max_age() + 1,
        }
    }
}

/// Reconstructs a `net_res` detector input from a ring of `scale_res` frames.
pub fn apply_scale_plan(ring: &FrameRing, plan: &ScalePlan) -> Result<OmniFrame, TemporalError> {
    plan.validate()?;
    let current = ring.latest().ok_or(TemporalError::InsufficientHistory {
        needed: plan.history(),
        available: 0,
    })?;
    if current.width() != plan.scale_res || current.height() != plan.scale_res {
        return Err(TemporalError::InvalidResolution(format!(
            "ring holds {}x{} frames, plan expects {}px",
            current.width(),
            current.height(),
            plan.scale_res
        )));
    }
    match &plan.mode {
        ScaleMode::Linear => upscale_linear(current, plan.net_res),
        ScaleMode::Interlaced(kernel) => upscale_linear(&interlace(ring, kernel)?, plan.net_res),
    }
}

/// Full-resolution square frames in, detector-resolution frames out.
pub struct Degrader {
    plan: ScalePlan,
    ring: FrameRing,
}

impl Degrader {
    pub fn new(plan: ScalePlan, fps: f64) -> Result<Self, TemporalError> {
        plan.validate()?;
        let ring = FrameRing::new(plan.history(), fps);
        Ok(Self { plan, ring })
    }

    pub fn plan(&self) -> &ScalePlan {
        &self.plan
    }

    pub fn ring(&self) -> &FrameRing {
        &self.ring
    }

    /// Downscales and records a frame; returns the reconstruction once the
    /// ring holds enough history, `None` while warming up.
    pub fn process(&mut self, frame: &OmniFrame) -> Result<Option<OmniFrame>, TemporalError> {
        self.ring.push_frame(downscale(frame, self.plan.scale_res)?)?;
        if self.ring.len() < self.plan.history() {
            return Ok(None);
        }
        apply_scale_plan(&self.ring, &self.plan).map(Some)
    }
}
