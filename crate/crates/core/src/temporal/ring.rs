use std::collections::VecDeque;

use crate::frame::OmniFrame;

use super::TemporalError;

/// Bounded history of low-resolution frames, newest last.
#[derive(Clone, Debug)]
pub struct FrameRing {
    capacity: usize,
    fps: f64,
    frames: VecDeque<OmniFrame>,
}

impl FrameRing {
    pub fn new(capacity: usize, fps: f64) -> Self {
        assert!(capacity >= 1, "ring capacity must be at least 1");
        Self {
            capacity,
            fps,
            frames: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    /// Appends a frame, evicting the oldest one at capacity.
    pub fn push_frame(&mut self, frame: OmniFrame) -> Result<(), TemporalError> {
        if let Some(last) = self.frames.back() {
            if frame.index <= last.index {
                return Err(TemporalError::OutOfOrderFrame {
                    last: last.index,
                    got: frame.index,
                });
            }
            if frame.dims() != last.dims() {
                return Err(TemporalError::DimensionMismatch {
                    expected: last.dims(),
                    actual: frame.dims(),
                });
            }
        }
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn latest(&self) -> Option<&OmniFrame> {
        self.frames.back()
    }

    /// Frame pushed `age` pushes before the newest one.
    pub fn frame_at_age(&self, age: usize) -> Option<&OmniFrame> {
        self.frames.len().checked_sub(age + 1).map(|i| &self.frames[i])
    }

    /// Seconds between the newest frame and the frame at `age`.
    pub fn age_seconds(&self, age: usize) -> Option<f64> {
        Some(self.latest()?.timestamp - self.frame_at_age(age)?.timestamp)
    }

    pub fn iter(&self) -> impl Iterator<Item = &OmniFrame> {
        self.frames.iter()
    }
}
