//! Line-delimited JSON annotation files.
//!
//! ```text
//! {"v":1,"frame":0,"ts":0.0,"accepted":true,"boxes":[[cx,cy,w,h,score],...]}
//! ```
//!
//! Box coordinates are box centres and sizes as fractions of the omni image.
//! Ground-truth files may add `"points":[[x,y],...]` (head points, same
//! normalisation), and skipped frames carry an `"error"` string.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{DetectionBox, Point2};

use super::LabelError;

pub const ANNOTATION_VERSION: u64 = 1;

/// `[cx, cy, w, h, score]`, all but the score relative to the image size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 5]", into = "[f64; 5]")]
pub struct NormBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

impl From<[f64; 5]> for NormBox {
    fn from([cx, cy, w, h, score]: [f64; 5]) -> Self {
        Self { cx, cy, w, h, score }
    }
}

impl From<NormBox> for [f64; 5] {
    fn from(b: NormBox) -> Self {
        [b.cx, b.cy, b.w, b.h, b.score]
    }
}

impl NormBox {
    /// Normalises a pixel box, first clipping it to the image.
    pub fn from_pixels(b: &DetectionBox, width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        let x0 = b.x.clamp(0.0, w);
        let x1 = (b.x + b.w).clamp(0.0, w);
        let y0 = b.y.clamp(0.0, h);
        let y1 = (b.y + b.h).clamp(0.0, h);
        Self {
            cx: (x0 + x1) / 2.0 / w,
            cy: (y0 + y1) / 2.0 / h,
            w: (x1 - x0) / w,
            h: (y1 - y0) / h,
            score: b.score,
        }
    }

    pub fn to_pixels(&self, width: usize, height: usize) -> DetectionBox {
        let (w, h) = (width as f64, height as f64);
        DetectionBox::new(
            (self.cx - self.w / 2.0) * w,
            (self.cy - self.h / 2.0) * h,
            self.w * w,
            self.h * h,
            self.score,
        )
    }

    pub fn in_unit_range(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        unit(self.w)
            && unit(self.h)
            && unit(self.cx - self.w / 2.0)
            && unit(self.cx + self.w / 2.0)
            && unit(self.cy - self.h / 2.0)
            && unit(self.cy + self.h / 2.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotation {
    pub frame: u64,
    pub ts: f64,
    pub accepted: bool,
    pub boxes: Vec<NormBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl FrameAnnotation {
    pub fn skipped(frame: u64, ts: f64, error: impl Into<String>) -> Self {
        Self {
            frame,
            ts,
            error: Some(error.into()),
            ..Default::default()
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.error.is_some()
    }

    pub fn pixel_boxes(&self, width: usize, height: usize) -> Vec<DetectionBox> {
        self.boxes
            .iter()
            .map(|b| {
                let mut d = b.to_pixels(width, height);
                d.frame_index = self.frame;
                d
            })
            .collect()
    }

    pub fn pixel_points(&self, width: usize, height: usize) -> Option<Vec<Point2>> {
        self.points.as_ref().map(|ps| {
            ps.iter()
                .map(|[x, y]| Point2::new(x * width as f64, y * height as f64))
                .collect()
        })
    }
}

#[derive(Serialize)]
struct WireOut<'a> {
    v: u64,
    #[serde(flatten)]
    ann: &'a FrameAnnotation,
}

pub fn write_annotations_to<W: Write>(annotations: &[FrameAnnotation], mut out: W) -> std::io::Result<()> {
    for a in annotations {
        serde_json::to_writer(
            &mut out,
            &WireOut {
                v: ANNOTATION_VERSION,
                ann: a,
            },
        )?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_annotations(annotations: &[FrameAnnotation], path: &Path) -> Result<(), LabelError> {
    let io = |source| LabelError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_annotations_to(annotations, BufWriter::new(file)).map_err(io)
}

/// Reads records in file order. `name` is only used in error messages.
pub fn read_annotations_from<R: Read>(input: R, name: &str) -> Result<Vec<FrameAnnotation>, LabelError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|source| LabelError::Io {
            path: name.to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |detail: String| LabelError::Annotation {
            path: name.to_string(),
            line: i + 1,
            detail,
        };
        let mut value: serde_json::Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| bad("record is not an object".into()))?;
        let version = obj
            .remove("v")
            .ok_or_else(|| bad("missing \"v\"".into()))?
            .as_u64()
            .ok_or_else(|| bad("\"v\" is not an unsigned integer".into()))?;
        if version != ANNOTATION_VERSION {
            return Err(LabelError::SchemaVersion {
                path: name.to_string(),
                line: i + 1,
                found: version,
                expected: ANNOTATION_VERSION,
            });
        }
        out.push(serde_json::from_value(value).map_err(|e| bad(e.to_string()))?);
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> Result<Vec<FrameAnnotation>, LabelError> {
    let file = File::open(path).map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_annotations_from(file, &path.display().to_string())
}
