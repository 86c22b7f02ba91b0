//! Room occupancy from a ceiling-mounted omnidirectional camera.
//!
//! - [`geometry`]: fragment unwarping, box warping and NMS.
//! - [`label`]: pseudo-label generation from external detectors.
//! - [`temporal`]: privacy downscaling and temporal interlacing.
//! - [`eval`]: matching, PR curves, AP and count reports.
//! - [`synth`]: synthetic scenes with ground truth.

pub mod eval;
pub mod frame;
pub mod geometry;
pub mod label;
pub mod synth;
pub mod temporal;

pub use frame::{load_frame, save_frame, FrameError, OmniFrame};
