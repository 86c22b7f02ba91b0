//! Polar unwarping of the image circle into `k` overlapping fragments.
//!
//! Output columns map linearly to angle and output rows linearly to radius.
//! Row 0 sits on the outer edge of the radial band so that people, whose
//! heads point away from the optical centre, come out upright.

use std::f64::consts::TAU;

use crate::frame::OmniFrame;

use super::{GeometryError, OmniCameraModel, Point2, UnwarpConfig};

/// Fixed-point fractional bits of the lookup table.
pub const LUT_FRAC_BITS: u32 = 8;
const LUT_ONE: f64 = (1 << LUT_FRAC_BITS) as f64;
const EPS: f64 = 1e-9;

/// Precomputed correspondence between one fragment and the omni image.
#[derive(Clone, Debug, PartialEq)]
pub struct FragmentMap {
    pub fragment_index: usize,
    /// Angle of column 0, radians (may be negative).
    pub start_angle: f64,
    /// Angle of the last column, radians.
    pub end_angle: f64,
    /// Non-overlapping part of the span, `[core_start, core_end)`.
    pub core_start: f64,
    pub core_end: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub center: Point2,
    pub source_width: usize,
    pub source_height: usize,
    pub width: usize,
    pub height: usize,
    /// Source position per output pixel, row-major, `Q.8` fixed point.
    pub(crate) lut: Vec<[i32; 2]>,
}

impl FragmentMap {
    pub fn span(&self) -> f64 {
        self.end_angle - self.start_angle
    }

    pub fn lut(&self) -> &[[i32; 2]] {
        &self.lut
    }

    /// Source coordinate of output pixel `(col, row)` as stored in the table.
    pub fn lut_point(&self, col: usize, row: usize) -> Point2 {
        let [x, y] = self.lut[row * self.width + col];
        Point2::new(x as f64 / LUT_ONE, y as f64 / LUT_ONE)
    }

    fn angle_of_col(&self, col: f64) -> f64 {
        self.start_angle + col / (self.width - 1) as f64 * self.span()
    }

    fn radius_of_row(&self, row: f64) -> f64 {
        self.r_hi - row / (self.height - 1) as f64 * (self.r_hi - self.r_lo)
    }

    /// Angle relative to column 0, in `[0, 2π)`.
    fn offset_of(&self, theta: f64) -> f64 {
        (theta - self.start_angle).rem_euclid(TAU)
    }

    /// True when the angle lies in the fragment's core (non-overlap) span.
    pub fn core_contains(&self, theta: f64) -> bool {
        (theta - self.core_start).rem_euclid(TAU) < self.core_end - self.core_start
    }

    pub(crate) fn from_parts(
        fragment_index: usize,
        angles: (f64, f64, f64, f64),
        band: (f64, f64),
        center: Point2,
        source: (usize, usize),
        size: (usize, usize),
    ) -> Self {
        let (start_angle, end_angle, core_start, core_end) = angles;
        let (width, height) = size;
        let mut map = Self {
            fragment_index,
            start_angle,
            end_angle,
            core_start,
            core_end,
            r_lo: band.0,
            r_hi: band.1,
            center,
            source_width: source.0,
            source_height: source.1,
            width,
            height,
            lut: Vec::new(),
        };
        let trig: Vec<(f64, f64)> = (0..width)
            .map(|c| {
                let (s, c) = map.angle_of_col(c as f64).sin_cos();
                (c, s)
            })
            .collect();
        let mut lut = Vec::with_capacity(width * height);
        for row in 0..height {
            let r = map.radius_of_row(row as f64);
            for &(cos, sin) in &trig {
                let x = center.x + r * cos;
                let y = center.y + r * sin;
                lut.push([(x * LUT_ONE).round() as i32, (y * LUT_ONE).round() as i32]);
            }
        }
        map.lut = lut;
        map
    }
}

/// Builds the `k` fragment maps for a camera.
pub fn build_fragment_maps(camera: &OmniCameraModel, cfg: &UnwarpConfig) -> Result<Vec<FragmentMap>, GeometryError> {
    camera.validate()?;
    cfg.validate()?;
    let core = cfg.core_span();
    let pad = cfg.overlap * core;
    let span = cfg.span();
    let (r_lo, r_hi) = cfg.radial_band(camera);
    let width = cfg.fragment_width.unwrap_or_else(|| {
        let band = (r_hi - r_lo).max(1.0);
        let r_mid = 0.5 * (r_lo + r_hi);
        ((span * r_mid * cfg.fragment_height as f64 / band).round() as usize).max(2)
    });
    let center = Point2::new(camera.center_x, camera.center_y);
    Ok((0..cfg.k)
        .map(|i| {
            let core_start = i as f64 * core;
            let core_end = core_start + core;
            FragmentMap::from_parts(
                i,
                (core_start - pad, core_start - pad + span, core_start, core_end),
                (r_lo, r_hi),
                center,
                (camera.image_width, camera.image_height),
                (width, cfg.fragment_height),
            )
        })
        .collect())
}

/// Resamples one fragment out of an omni frame (bilinear, fixed point,
/// edge-clamped).
pub fn unwarp_frame(frame: &OmniFrame, map: &FragmentMap) -> Result<OmniFrame, GeometryError> {
    if frame.width() != map.source_width || frame.height() != map.source_height {
        return Err(GeometryError::DimensionMismatch {
            expected: (map.source_width, map.source_height),
            actual: (frame.width(), frame.height()),
        });
    }
    let (sw, sh, ch) = frame.dims();
    let src = frame.data();
    let mut out = vec![0u8; map.width * map.height * ch];
    let mask = (1i32 << LUT_FRAC_BITS) - 1;
    let one = 1u32 << LUT_FRAC_BITS;
    let round = 1u32 << (2 * LUT_FRAC_BITS - 1);
    let (max_x, max_y) = (sw as i32 - 1, sh as i32 - 1);
    for (i, &[fx, fy]) in map.lut.iter().enumerate() {
        let x0 = fx >> LUT_FRAC_BITS;
        let y0 = fy >> LUT_FRAC_BITS;
        let ax = (fx & mask) as u32;
        let ay = (fy & mask) as u32;
        let (xa, xb) = (x0.clamp(0, max_x) as usize, (x0 + 1).clamp(0, max_x) as usize);
        let (ya, yb) = (y0.clamp(0, max_y) as usize, (y0 + 1).clamp(0, max_y) as usize);
        let row_a = ya * sw;
        let row_b = yb * sw;
        for c in 0..ch {
            let p00 = src[(row_a + xa) * ch + c] as u32;
            let p01 = src[(row_a + xb) * ch + c] as u32;
            let p10 = src[(row_b + xa) * ch + c] as u32;
            let p11 = src[(row_b + xb) * ch + c] as u32;
            let top = p00 * (one - ax) + p01 * ax;
            let bottom = p10 * (one - ax) + p11 * ax;
            out[i * ch + c] = ((top * (one - ay) + bottom * ay + round) >> (2 * LUT_FRAC_BITS)) as u8;
        }
    }
    let out = OmniFrame::new(map.width, map.height, ch, out).expect("fragment buffer");
    Ok(out.with_stamp(frame.index, frame.timestamp))
}

/// Fragment pixel coordinate to omni pixel coordinate.
pub fn fragment_to_omni(point: Point2, map: &FragmentMap) -> Result<Point2, GeometryError> {
    let in_range = |v: f64, hi: usize| v >= -EPS && v <= (hi - 1) as f64 + EPS;
    if !point.is_finite() || !in_range(point.x, map.width) || !in_range(point.y, map.height) {
        return Err(GeometryError::OutOfFragment { x: point.x, y: point.y });
    }
    let theta = map.angle_of_col(point.x);
    let r = map.radius_of_row(point.y);
    Ok(Point2::new(
        map.center.x + r * theta.cos(),
        map.center.y + r * theta.sin(),
    ))
}

/// Every fragment that sees an omni point, with the point's fragment
/// coordinates. Points in an exclusion area produce an empty list.
pub fn omni_to_fragment(point: Point2, maps: &[FragmentMap]) -> Vec<(usize, Point2)> {
    let mut hits = Vec::new();
    for map in maps {
        let dx = point.x - map.center.x;
        let dy = point.y - map.center.y;
        let r = dx.hypot(dy);
        if r < map.r_lo - EPS || r > map.r_hi + EPS {
            continue;
        }
        let offset = map.offset_of(dy.atan2(dx));
        if offset >= map.span() {
            continue;
        }
        let col = offset / map.span() * (map.width - 1) as f64;
        let row = if map.r_hi > map.r_lo {
            ((map.r_hi - r) / (map.r_hi - map.r_lo)).clamp(0.0, 1.0) * (map.height - 1) as f64
        } else {
            0.0
        };
        hits.push((map.fragment_index, Point2::new(col, row)));
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn camera() -> OmniCameraModel {
        OmniCameraModel::centered(400, 400, 40.0, 190.0)
    }

    fn cfg(k: usize, overlap: f64) -> UnwarpConfig {
        UnwarpConfig {
            k,
            overlap,
            y_b: 1.0,
            fragment_height: 60,
            fragment_width: Some(180),
        }
    }

    #[test]
    fn k3_overlap_ten_percent_spans_144_degrees() {
        let maps = build_fragment_maps(&camera(), &cfg(3, 0.10)).unwrap();
        assert_eq!(maps.len(), 3);
        for m in &maps {
            assert!((m.span().to_degrees() - 144.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_fragment_spans_full_circle() {
        let maps = build_fragment_maps(&camera(), &cfg(1, 0.0)).unwrap();
        assert_eq!(maps.len(), 1);
        assert!((maps[0].span() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn k4_neighbours_share_18_degrees() {
        let maps = build_fragment_maps(&camera(), &cfg(4, 0.10)).unwrap();
        for i in 0..4 {
            let a = &maps[i];
            let b = &maps[(i + 1) % 4];
            let shared = a.end_angle - (b.start_angle + if i == 3 { TAU } else { 0.0 });
            assert!(
                (shared.to_degrees() - 18.0).abs() < 1e-9,
                "pair {i}: {}",
                shared.to_degrees()
            );
            // Cross-check by sampling the table: angles of sampled columns in
            // the shared wedge must be covered by both maps.
            let step = a.span() / (a.width - 1) as f64;
            let shared_cols = (0..a.width)
                .filter(|&c| {
                    let p = a.lut_point(c, 0);
                    let th = (p.y - a.center.y).atan2(p.x - a.center.x);
                    b.offset_of(th) < b.span() - 1e-6
                })
                .count();
            let expected = shared / step;
            assert!(
                (shared_cols as f64 - expected).abs() <= 2.0,
                "{shared_cols} vs {expected}"
            );
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(matches!(
            build_fragment_maps(&camera(), &cfg(0, 0.1)),
            Err(GeometryError::InvalidConfig(_))
        ));
        assert!(matches!(
            build_fragment_maps(&camera(), &cfg(3, 0.5)),
            Err(GeometryError::InvalidConfig(_))
        ));
        let bad_yb = UnwarpConfig {
            y_b: 1.5,
            ..cfg(3, 0.1)
        };
        assert!(build_fragment_maps(&camera(), &bad_yb).is_err());
    }

    #[test]
    fn lut_stays_in_annulus_and_columns_are_monotone() {
        let maps = build_fragment_maps(&camera(), &cfg(3, 0.25)).unwrap();
        let tol = 2.0f64.sqrt() / LUT_ONE;
        for m in &maps {
            let step = m.span() / (m.width - 1) as f64;
            for row in 0..m.height {
                let mut last = f64::NEG_INFINITY;
                for col in 0..m.width {
                    let p = m.lut_point(col, row);
                    let r = (p.x - m.center.x).hypot(p.y - m.center.y);
                    assert!(r >= m.r_lo - tol && r <= m.r_hi + tol);
                    let nominal = m.start_angle + col as f64 * step;
                    let actual = (p.y - m.center.y).atan2(p.x - m.center.x);
                    let err = (actual - nominal + PI).rem_euclid(TAU) - PI;
                    assert!(err.abs() < 1e-3, "col {col} row {row}: {err}");
                    assert!(nominal + err > last);
                    last = nominal + err;
                }
            }
        }
    }

    #[test]
    fn constant_frame_unwarps_to_constant() {
        let cam = camera();
        let maps = build_fragment_maps(&cam, &cfg(3, 0.1)).unwrap();
        let frame = OmniFrame::filled(400, 400, 3, 201);
        for m in &maps {
            let out = unwarp_frame(&frame, m).unwrap();
            assert_eq!(out.dims(), (180, 60, 3));
            assert!(out.data().iter().all(|&v| v == 201));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let maps = build_fragment_maps(&camera(), &cfg(2, 0.0)).unwrap();
        let frame = OmniFrame::filled(399, 400, 1, 0);
        assert!(matches!(
            unwarp_frame(&frame, &maps[0]),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn top_row_is_outer_edge() {
        let maps = build_fragment_maps(&camera(), &cfg(3, 0.1)).unwrap();
        let m = &maps[1];
        for col in [0.0, 17.5, 179.0] {
            let top = fragment_to_omni(Point2::new(col, 0.0), m).unwrap();
            let bottom = fragment_to_omni(Point2::new(col, 59.0), m).unwrap();
            let r = |p: Point2| (p.x - m.center.x).hypot(p.y - m.center.y);
            assert!((r(top) - m.r_hi).abs() <= 0.5);
            assert!((r(bottom) - m.r_lo).abs() <= 0.5);
        }
    }

    #[test]
    fn out_of_fragment_points_error() {
        let maps = build_fragment_maps(&camera(), &cfg(3, 0.1)).unwrap();
        for p in [Point2::new(-1.0, 0.0), Point2::new(0.0, 60.0), Point2::new(180.0, 3.0)] {
            assert!(matches!(
                fragment_to_omni(p, &maps[0]),
                Err(GeometryError::OutOfFragment { .. })
            ));
        }
    }

    #[test]
    fn exclusion_and_overlap_counts() {
        let cam = camera();
        let maps = build_fragment_maps(&cam, &cfg(3, 0.1)).unwrap();
        let c = Point2::new(cam.center_x, cam.center_y);
        let at = |r: f64, deg: f64| Point2::new(c.x + r * deg.to_radians().cos(), c.y + r * deg.to_radians().sin());
        assert!(omni_to_fragment(at(20.0, 60.0), &maps).is_empty());
        assert!(omni_to_fragment(at(195.0, 60.0), &maps).is_empty());
        assert_eq!(omni_to_fragment(at(100.0, 60.0), &maps).len(), 1);
        // Boundary between fragment 0 and 1 sits at 120°, wedge is ±12°.
        let hits = omni_to_fragment(at(100.0, 125.0), &maps);
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(omni_to_fragment(at(100.0, 355.0), &maps).len(), 2);
    }

    #[test]
    fn overlap_point_warps_back_identically() {
        let cam = camera();
        let maps = build_fragment_maps(&cam, &cfg(3, 0.1)).unwrap();
        let p = Point2::new(cam.center_x + 120.0 * 2.1f64.cos(), cam.center_y + 120.0 * 2.1f64.sin());
        let hits = omni_to_fragment(p, &maps);
        assert_eq!(hits.len(), 2);
        let a = fragment_to_omni(hits[0].1, &maps[hits[0].0]).unwrap();
        let b = fragment_to_omni(hits[1].1, &maps[hits[1].0]).unwrap();
        assert!(a.dist(b) <= 0.5 && a.dist(p) <= 0.5);
    }
}
