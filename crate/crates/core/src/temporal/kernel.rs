use serde::{Deserialize, Serialize};

use super::TemporalError;

fn default_t() -> u32 {
    1
}

/// 2×2 matrix of frame ages. Output pixel `(2i+di, 2j+dj)` is copied from
/// pixel `(i, j)` of the frame `t * cells[di][dj]` frames before the current one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterlacingKernel {
    pub name: String,
    pub cells: [[u32; 2]; 2],
    /// Time-delta multiplier applied to every cell.
    #[serde(default = "default_t")]
    pub t: u32,
}

impl InterlacingKernel {
    pub fn new(name: impl Into<String>, cells: [[u32; 2]; 2], t: u32) -> Result<Self, TemporalError> {
        let k = Self {
            name: name.into(),
            cells,
            t,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), TemporalError> {
        if self.t == 0 {
            return Err(TemporalError::InvalidKernel(format!(
                "{}: t must be at least 1",
                self.name
            )));
        }
        if !self.cells.iter().flatten().any(|&c| c == 0) {
            return Err(TemporalError::InvalidKernel(format!(
                "{}: no cell samples the current frame",
                self.name
            )));
        }
        Ok(())
    }

    /// Same cells with a different time-delta.
    pub fn with_t(&self, t: u32) -> Self {
        Self { t, ..self.clone() }
    }

    /// Frame age sampled by cell `(di, dj)`.
    pub fn age(&self, di: usize, dj: usize) -> usize {
        (self.t * self.cells[di][dj]) as usize
    }

    pub fn max_age(&self) -> usize {
        self.cells
            .iter()
            .flatten()
            .map(|&c| (c * self.t) as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Shipped kernels `k1`, `k2`, `k3` at `t = 1`.
pub fn canonical_kernels() -> Vec<InterlacingKernel> {
    vec![
        InterlacingKernel::new("k1", [[0, 1], [1, 0]], 1).expect("k1"),
        InterlacingKernel::new("k2", [[0, 1], [2, 3]], 1).expect("k2"),
        InterlacingKernel::new("k3", [[0, 0], [1, 1]], 1).expect("k3"),
    ]
}

/// Kernel definition file: a list of `[[kernel]]` tables.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct KernelFile {
    #[serde(default, rename = "kernel")]
    pub kernels: Vec<InterlacingKernel>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_set() {
        let ks = canonical_kernels();
        assert_eq!(
            ks.iter().map(|k| k.name.as_str()).collect::<Vec<_>>(),
            ["k1", "k2", "k3"]
        );
        assert_eq!(ks[1].max_age(), 3);
        assert_eq!(ks[1].with_t(3).max_age(), 9);
        assert_eq!(ks[1].with_t(2).age(1, 0), 4);
    }

    #[test]
    fn invalid_kernels() {
        assert!(InterlacingKernel::new("x", [[1, 1], [2, 3]], 1).is_err());
        assert!(InterlacingKernel::new("x", [[0, 1], [2, 3]], 0).is_err());
        assert!(InterlacingKernel::new("zeros", [[0, 0], [0, 0]], 4).is_ok());
    }
}
