//! Pseudo-label generation: drive detection providers over unwarped
//! fragments, fuse their output on the omni image, keep only frames whose
//! count agrees with recent history, and persist the result.

mod annotations;
mod filter;
mod fuse;
mod pose;
mod provider;
mod threshold;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use annotations::{
    read_annotations, read_annotations_from, write_annotations, write_annotations_to, FrameAnnotation, NormBox,
    ANNOTATION_VERSION,
};
pub use filter::{CountFilterState, FilterDecision, DEFAULT_WINDOW_LEN};
pub use fuse::{fuse_to_omni, Harvest, DEFAULT_NMS_THRESHOLD};
pub use pose::{pose_to_box, Keypoint, PoseBoxRule, PoseDetection};
pub use provider::{
    encode_request, harvest_fragments, parse_reply, DetectionProvider, FragmentDetections, ProcessProvider,
    ProviderKind, ProviderSpec, Reply, Request, PROTOCOL_VERSION,
};
pub use threshold::{select_threshold_f1, ThresholdChoice};

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("invalid provider: {0}")]
    InvalidProvider(String),
    #[error("provider {provider} timed out after {seconds}s on frame {frame}, fragment {fragment}")]
    ProviderTimeout {
        provider: String,
        frame: u64,
        fragment: usize,
        seconds: f64,
    },
    #[error("provider {provider} sent a bad reply: {detail}")]
    Protocol { provider: String, detail: String },
    #[error("provider {provider}: {detail}")]
    ProviderIo { provider: String, detail: String },
    #[error("pose has no keypoint with confidence >= {0}")]
    NoConfidentKeypoints(f64),
    #[error("no samples to choose a threshold from")]
    NoSamples,
    #[error("{path}:{line}: annotation version {found}, expected {expected}")]
    SchemaVersion {
        path: String,
        line: usize,
        found: u64,
        expected: u64,
    },
    #[error("{path}:{line}: {detail}")]
    Annotation { path: String, line: usize, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl LabelError {
    /// Errors that cost one frame but leave the run usable.
    pub fn is_per_frame(&self) -> bool {
        matches!(
            self,
            LabelError::ProviderTimeout { .. }
                | LabelError::Protocol { .. }
                | LabelError::ProviderIo { .. }
                | LabelError::Geometry(_)
        )
    }
}
