use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Ceiling-mounted fisheye: an image circle around `center` with an
/// excluded inner disc of `radius_inner` pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmniCameraModel {
    pub center_x: f64,
    pub center_y: f64,
    pub radius_inner: f64,
    pub radius_outer: f64,
    pub image_width: usize,
    pub image_height: usize,
}

impl OmniCameraModel {
    /// Camera whose circle is centred on the image.
    pub fn centered(image_width: usize, image_height: usize, radius_inner: f64, radius_outer: f64) -> Self {
        Self {
            center_x: (image_width as f64 - 1.0) / 2.0,
            center_y: (image_height as f64 - 1.0) / 2.0,
            radius_inner,
            radius_outer,
            image_width,
            image_height,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidCamera(msg));
        let vals = [self.center_x, self.center_y, self.radius_inner, self.radius_outer];
        if vals.iter().any(|v| !v.is_finite()) {
            return bad("non-finite camera parameter".into());
        }
        if self.image_width == 0 || self.image_height == 0 {
            return bad("empty image".into());
        }
        let limit = self.image_width.min(self.image_height) as f64 / 2.0 + 1.0;
        if !(0.0 <= self.radius_inner && self.radius_inner < self.radius_outer && self.radius_outer <= limit) {
            return bad(format!(
                "radii must satisfy 0 <= inner ({}) < outer ({}) <= {limit}",
                self.radius_inner, self.radius_outer
            ));
        }
        if self.center_x < 0.0
            || self.center_y < 0.0
            || self.center_x >= self.image_width as f64
            || self.center_y >= self.image_height as f64
        {
            return bad(format!(
                "center ({}, {}) outside the image",
                self.center_x, self.center_y
            ));
        }
        Ok(())
    }

    /// Top-left corner and side of the square that tightly holds the image circle.
    pub fn square_crop(&self) -> (i64, i64, usize) {
        let side = (2.0 * self.radius_outer).ceil().max(1.0) as usize;
        let half = (side as f64 - 1.0) / 2.0;
        let x0 = (self.center_x - half).round() as i64;
        let y0 = (self.center_y - half).round() as i64;
        (x0, y0, side)
    }

    /// Camera model in the coordinates of the square crop.
    pub fn cropped(&self) -> Self {
        let (x0, y0, side) = self.square_crop();
        Self {
            center_x: self.center_x - x0 as f64,
            center_y: self.center_y - y0 as f64,
            radius_inner: self.radius_inner,
            radius_outer: self.radius_outer.min(side as f64 / 2.0 + 1.0),
            image_width: side,
            image_height: side,
        }
    }

    /// Camera model after resampling a `from`-pixel square to `to` pixels,
    /// with pixel centres aligned the way the resamplers align them.
    pub fn resampled(&self, from: usize, to: usize) -> Self {
        let s = to as f64 / from as f64;
        let map = |v: f64| (v + 0.5) * s - 0.5;
        Self {
            center_x: map(self.center_x),
            center_y: map(self.center_y),
            radius_inner: self.radius_inner * s,
            radius_outer: self.radius_outer * s,
            image_width: ((self.image_width as f64) * s).round() as usize,
            image_height: ((self.image_height as f64) * s).round() as usize,
        }
    }
}

/// How the image circle is cut into fragments.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnwarpConfig {
    pub k: usize,
    /// Fraction of a fragment's core angular width duplicated at either side.
    pub overlap: f64,
    /// Fraction of the radial band kept, measured from the outer radius inward.
    pub y_b: f64,
    pub fragment_height: usize,
    /// `None` derives the width from the band so fragments keep their aspect ratio.
    pub fragment_width: Option<usize>,
}

impl Default for UnwarpConfig {
    fn default() -> Self {
        Self {
            k: 3,
            overlap: 0.1,
            y_b: 1.0,
            fragment_height: 160,
            fragment_width: None,
        }
    }
}

impl UnwarpConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidConfig(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(0.0..0.5).contains(&self.overlap) {
            return bad(format!("overlap {} outside [0, 0.5)", self.overlap));
        }
        if !(0.0..=1.0).contains(&self.y_b) {
            return bad(format!("y_b {} outside [0, 1]", self.y_b));
        }
        if self.fragment_height < 2 {
            return bad("fragment_height must be at least 2".into());
        }
        if matches!(self.fragment_width, Some(w) if w < 2) {
            return bad("fragment_width must be at least 2".into());
        }
        Ok(())
    }

    /// Core (non-overlapping) angular width of one fragment, radians.
    pub fn core_span(&self) -> f64 {
        std::f64::consts::TAU / self.k as f64
    }

    /// Angular width including the overlap on both sides, radians.
    pub fn span(&self) -> f64 {
        self.core_span() * (1.0 + 2.0 * self.overlap)
    }

    /// Radial band `[r_lo, r_hi]` retained for a camera.
    pub fn radial_band(&self, camera: &OmniCameraModel) -> (f64, f64) {
        let r_hi = camera.radius_outer;
        (r_hi - self.y_b * (r_hi - camera.radius_inner), r_hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camera_invariants() {
        assert!(OmniCameraModel::centered(100, 100, 10.0, 50.0).validate().is_ok());
        assert!(OmniCameraModel::centered(100, 100, 10.0, 51.0).validate().is_ok());
        assert!(OmniCameraModel::centered(100, 100, 10.0, 51.5).validate().is_err());
        assert!(OmniCameraModel::centered(100, 100, 50.0, 50.0).validate().is_err());
        let mut off = OmniCameraModel::centered(100, 100, 10.0, 40.0);
        off.center_x = 100.0;
        assert!(off.validate().is_err());
    }

    #[test]
    fn config_errors() {
        let ok = UnwarpConfig::default();
        assert!(ok.validate().is_ok());
        for cfg in [
            UnwarpConfig { k: 0, ..ok },
            UnwarpConfig { overlap: 0.5, ..ok },
            UnwarpConfig { overlap: -0.1, ..ok },
            UnwarpConfig { y_b: 1.01, ..ok },
            UnwarpConfig { y_b: -0.01, ..ok },
        ] {
            assert!(
                matches!(cfg.validate(), Err(GeometryError::InvalidConfig(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn band_follows_y_b() {
        let cam = OmniCameraModel::centered(200, 200, 20.0, 100.0);
        let cfg = UnwarpConfig {
            y_b: 0.25,
            ..Default::default()
        };
        assert_eq!(cfg.radial_band(&cam), (80.0, 100.0));
    }

    #[test]
    fn crop_recentres_camera() {
        let cam = OmniCameraModel {
            center_x: 320.0,
            center_y: 240.0,
            radius_inner: 10.0,
            radius_outer: 200.0,
            image_width: 640,
            image_height: 480,
        };
        let c = cam.cropped();
        assert_eq!((c.image_width, c.image_height), (400, 400));
        assert!((c.center_x - 199.5).abs() <= 0.5 && (c.center_y - 199.5).abs() <= 0.5);
        assert!(c.validate().is_ok());
    }
}
