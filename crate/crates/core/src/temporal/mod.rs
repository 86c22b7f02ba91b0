//! Extreme low-resolution degradation and temporal reconstruction with
//! interlacing kernels.

mod kernel;
mod plan;
mod resample;
mod ring;

use thiserror::Error;

pub use kernel::{canonical_kernels, InterlacingKernel, KernelFile};
pub use plan::{apply_scale_plan, interlace, Degrader, ScaleMode, ScalePlan};
pub use resample::{downscale, nearest_2x, upscale_linear, MIN_SCALE_RES};
pub use ring::FrameRing;

#[derive(Debug, Error)]
pub enum TemporalError {
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),
    #[error("invalid scale plan: {0}")]
    InvalidPlan(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("ring holds {available} frames, kernel needs {needed}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("frame {got} arrived after frame {last}")]
    OutOfOrderFrame { last: u64, got: u64 },
    #[error("frame dims {actual:?} differ from ring dims {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize, usize),
        actual: (usize, usize, usize),
    },
}
