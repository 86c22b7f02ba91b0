use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Accepted frames remembered by the count filter (one second at 15 fps).
pub const DEFAULT_WINDOW_LEN: usize = 15;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterDecision {
    Accept,
    Drop,
}

/// Drops frames whose detection count strays from the recent mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountFilterState {
    window: VecDeque<usize>,
    window_len: usize,
    tolerance: usize,
}

impl Default for CountFilterState {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW_LEN, 0)
    }
}

impl CountFilterState {
    /// `window_len` is clamped to at least 1.
    pub fn new(window_len: usize, tolerance: usize) -> Self {
        let window_len = window_len.max(1);
        Self {
            window: VecDeque::with_capacity(window_len),
            window_len,
            tolerance,
        }
    }

    pub fn window(&self) -> impl Iterator<Item = usize> + '_ {
        self.window.iter().copied()
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn tolerance(&self) -> usize {
        self.tolerance
    }

    /// Window mean rounded half away from zero; `None` while empty.
    pub fn rounded_mean(&self) -> Option<usize> {
        if self.window.is_empty() {
            return None;
        }
        let sum: usize = self.window.iter().sum();
        Some((sum as f64 / self.window.len() as f64).round() as usize)
    }

    /// Judges one frame's count. Accepted counts enter the window; dropped
    /// counts leave it untouched.
    pub fn observe(&mut self, count: usize) -> FilterDecision {
        let accept = match self.rounded_mean() {
            None => true,
            Some(mean) => count.abs_diff(mean) <= self.tolerance,
        };
        if !accept {
            return FilterDecision::Drop;
        }
        if self.window.len() == self.window_len {
            self.window.pop_front();
        }
        self.window.push_back(count);
        FilterDecision::Accept
    }
}
