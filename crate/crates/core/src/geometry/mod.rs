//! Omnidirectional camera geometry: fragment unwarping, warping detections
//! back onto the omni image, IoU and non-maximum suppression.

mod boxes;
mod camera;
mod fragment;
pub mod omap;

use thiserror::Error;

pub use boxes::{
    box_to_polypoints, fit_box, iou, nms, priority_order, warp_polypoints, DetectionBox, Point2, PolyPointSet,
};
pub use camera::{OmniCameraModel, UnwarpConfig};
pub use fragment::{build_fragment_maps, fragment_to_omni, omni_to_fragment, unwarp_frame, FragmentMap, LUT_FRAC_BITS};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("invalid unwarp config: {0}")]
    InvalidConfig(String),
    #[error("frame is {actual:?}, map expects {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("point ({x}, {y}) lies outside the fragment")]
    OutOfFragment { x: f64, y: f64 },
    #[error("degenerate box {w}x{h}")]
    DegenerateBox { w: f64, h: f64 },
    #[error("empty point set")]
    EmptySet,
    #[error("fragment map file: {0}")]
    Omap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
