//! Raster frames flowing through the pipeline and their on-disk formats.
//!
//! Frames are 8-bit, interleaved, with either one (luma) or three (RGB)
//! channels. Binary PGM/PPM is written directly; PNG and every PNM variant
//! are read through the `image` crate.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame buffer holds {actual} bytes, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    Channels(usize),
    #[error("unsupported frame file extension: {0}")]
    Extension(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode {path}: {source}")]
    Decode {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

/// An 8-bit raster with its position in the stream.
#[derive(Clone, Debug, PartialEq)]
pub struct OmniFrame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
    pub index: u64,
    /// Capture time in seconds.
    pub timestamp: f64,
}

impl OmniFrame {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, FrameError> {
        if channels != 1 && channels != 3 {
            return Err(FrameError::Channels(channels));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(FrameError::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            index: 0,
            timestamp: 0.0,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("filled frame has a consistent buffer")
    }

    /// Single-channel frame built from a per-pixel function of `(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data).expect("from_fn frame has a consistent buffer")
    }

    pub fn with_stamp(mut self, index: u64, timestamp: f64) -> Self {
        self.index = index;
        self.timestamp = timestamp;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Rec.601 luma conversion; a luma frame is returned unchanged.
    pub fn to_luma(&self) -> OmniFrame {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| {
                let y = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
                ((y + 500) / 1000) as u8
            })
            .collect();
        let mut out = OmniFrame::new(self.width, self.height, 1, data).expect("luma buffer");
        out.index = self.index;
        out.timestamp = self.timestamp;
        out
    }

    /// Copy of the `size`×`size` window whose top-left corner is `(x0, y0)`.
    /// Pixels outside the source read as black.
    pub fn crop_square(&self, x0: i64, y0: i64, size: usize) -> OmniFrame {
        let mut out = OmniFrame::filled(size, size, self.channels, 0);
        for y in 0..size {
            let sy = y0 + y as i64;
            if sy < 0 || sy >= self.height as i64 {
                continue;
            }
            for x in 0..size {
                let sx = x0 + x as i64;
                if sx < 0 || sx >= self.width as i64 {
                    continue;
                }
                for c in 0..self.channels {
                    out.set(x, y, c, self.get(sx as usize, sy as usize, c));
                }
            }
        }
        out.index = self.index;
        out.timestamp = self.timestamp;
        out
    }

    /// Binary PNM encoding: P5 for luma, P6 for RGB.
    pub fn encode_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }
}

fn io_err(path: &Path, source: std::io::Error) -> FrameError {
    FrameError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a PGM/PPM/PNM or PNG file. Grayscale inputs stay single-channel;
/// everything else is converted to RGB.
pub fn load_frame(path: &Path) -> Result<OmniFrame, FrameError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|source| FrameError::Decode {
        path: path.display().to_string(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if img.color().has_color() {
        OmniFrame::new(w, h, 3, img.into_rgb8().into_raw())
    } else {
        OmniFrame::new(w, h, 1, img.into_luma8().into_raw())
    }
}

/// Writes a frame, choosing the format from the file extension.
pub fn save_frame(path: &Path, frame: &OmniFrame) -> Result<(), FrameError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" | "ppm" | "pnm" => {
            let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
            f.write_all(&frame.encode_pnm()).map_err(|e| io_err(path, e))
        }
        "png" => {
            let color = if frame.channels == 1 {
                image::ExtendedColorType::L8
            } else {
                image::ExtendedColorType::Rgb8
            };
            image::save_buffer_with_format(
                path,
                &frame.data,
                frame.width as u32,
                frame.height as u32,
                color,
                image::ImageFormat::Png,
            )
            .map_err(|source| FrameError::Decode {
                path: path.display().to_string(),
                source,
            })
        }
        other => Err(FrameError::Extension(other.to_string())),
    }
}

/// True for extensions the loader understands.
pub fn is_frame_file(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("pgm" | "ppm" | "pnm" | "png")
    )
}
