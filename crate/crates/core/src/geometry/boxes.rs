use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{fragment_to_omni, FragmentMap, GeometryError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Scored axis-aligned box, top-left origin, pixel units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
    /// Tag of the provider that produced the box.
    #[serde(default)]
    pub source: String,
    #[serde(default)]
    pub frame_index: u64,
    /// Fragment the box was detected in, if it came from one.
    #[serde(default)]
    pub fragment: Option<usize>,
}

impl DetectionBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64, score: f64) -> Self {
        Self {
            x,
            y,
            w,
            h,
            score,
            source: String::new(),
            frame_index: 0,
            fragment: None,
        }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Inclusive containment test.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x && p.x <= self.x + self.w && p.y >= self.y && p.y <= self.y + self.h
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.w > 0.0 && self.h > 0.0)
    }

    /// Same box with coordinates multiplied by `s`.
    pub fn scaled(&self, sx: f64, sy: f64) -> Self {
        Self {
            x: self.x * sx,
            y: self.y * sy,
            w: self.w * sx,
            h: self.h * sy,
            ..self.clone()
        }
    }
}

/// Boundary points of a box, optionally remembering the box they came from.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyPointSet {
    pub points: Vec<Point2>,
    pub provenance: Option<DetectionBox>,
}

impl PolyPointSet {
    pub fn new(points: Vec<Point2>) -> Self {
        Self {
            points,
            provenance: None,
        }
    }
}

/// Ten boundary points of a box: two interior points per side at thirds,
/// plus the two bottom corners. The top corners are left out because they
/// spread apart when warped onto the omni image.
pub fn box_to_polypoints(b: &DetectionBox) -> Result<PolyPointSet, GeometryError> {
    if b.is_degenerate() {
        return Err(GeometryError::DegenerateBox { w: b.w, h: b.h });
    }
    let (l, t, r, btm) = (b.x, b.y, b.x + b.w, b.y + b.h);
    let (x1, x2) = (b.x + b.w / 3.0, b.x + 2.0 * b.w / 3.0);
    let (y1, y2) = (b.y + b.h / 3.0, b.y + 2.0 * b.h / 3.0);
    let points = vec![
        Point2::new(x1, t),
        Point2::new(x2, t),
        Point2::new(r, y1),
        Point2::new(r, y2),
        Point2::new(r, btm),
        Point2::new(x2, btm),
        Point2::new(x1, btm),
        Point2::new(l, btm),
        Point2::new(l, y2),
        Point2::new(l, y1),
    ];
    Ok(PolyPointSet {
        points,
        provenance: Some(b.clone()),
    })
}

/// Maps fragment points onto the omni image, clamping strays to the fragment first.
pub fn warp_polypoints(pps: &PolyPointSet, map: &FragmentMap) -> PolyPointSet {
    let (mx, my) = ((map.width - 1) as f64, (map.height - 1) as f64);
    let points = pps
        .points
        .iter()
        .map(|p| {
            let q = Point2::new(p.x.clamp(0.0, mx), p.y.clamp(0.0, my));
            fragment_to_omni(q, map).expect("clamped point lies in the fragment")
        })
        .collect();
    PolyPointSet {
        points,
        provenance: pps.provenance.clone(),
    }
}

/// Smallest axis-aligned box around the points, never thinner than 1 px.
pub fn fit_box(pps: &PolyPointSet) -> Result<DetectionBox, GeometryError> {
    let first = pps.points.first().ok_or(GeometryError::EmptySet)?;
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for p in &pps.points[1..] {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let floor = |lo: f64, hi: f64| {
        if hi - lo < 1.0 {
            let mid = 0.5 * (lo + hi);
            (mid - 0.5, 1.0)
        } else {
            (lo, hi - lo)
        }
    };
    let (x, w) = floor(x0, x1);
    let (y, h) = floor(y0, y1);
    let mut out = pps
        .provenance
        .clone()
        .unwrap_or_else(|| DetectionBox::new(0.0, 0.0, 0.0, 0.0, 0.0));
    out.x = x;
    out.y = y;
    out.w = w;
    out.h = h;
    Ok(out)
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &DetectionBox, b: &DetectionBox) -> f64 {
    let iw = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let ih = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Detection priority: score descending, then lower fragment index
/// (boxes without one last), then `(x, y)` ascending.
pub fn priority_order(a: &DetectionBox, b: &DetectionBox) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| match (a.fragment, b.fragment) {
            (Some(fa), Some(fb)) => fa.cmp(&fb),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        })
        .then_with(|| a.x.total_cmp(&b.x))
        .then_with(|| a.y.total_cmp(&b.y))
        .then_with(|| a.w.total_cmp(&b.w))
        .then_with(|| a.h.total_cmp(&b.h))
}

/// Greedy non-maximum suppression. A box is dropped when its IoU with an
/// already kept box exceeds `threshold`. Output follows [`priority_order`].
pub fn nms(boxes: &[DetectionBox], threshold: f64) -> Vec<DetectionBox> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&i, &j| priority_order(&boxes[i], &boxes[j]));
    let mut suppressed = vec![false; boxes.len()];
    let mut kept = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[pos] {
            continue;
        }
        let keep = &boxes[i];
        for (other_pos, &j) in order.iter().enumerate().skip(pos + 1) {
            if !suppressed[other_pos] && iou(keep, &boxes[j]) > threshold {
                suppressed[other_pos] = true;
            }
        }
        kept.push(keep.clone());
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has(points: &[Point2], x: f64, y: f64) -> bool {
        points.iter().any(|p| p.x == x && p.y == y)
    }

    #[test]
    fn polypoints_of_unit_thirds_box() {
        let pps = box_to_polypoints(&DetectionBox::new(0.0, 0.0, 3.0, 3.0, 1.0)).unwrap();
        assert_eq!(pps.points.len(), 10);
        assert!(!has(&pps.points, 0.0, 0.0));
        assert!(!has(&pps.points, 3.0, 0.0));
        assert!(has(&pps.points, 1.0, 0.0));
        assert!(has(&pps.points, 2.0, 0.0));
        assert!(has(&pps.points, 0.0, 3.0));
        assert!(has(&pps.points, 3.0, 3.0));
    }

    #[test]
    fn polypoints_bottom_corners() {
        let pps = box_to_polypoints(&DetectionBox::new(10.0, 20.0, 30.0, 60.0, 1.0)).unwrap();
        assert!(has(&pps.points, 10.0, 80.0));
        assert!(has(&pps.points, 40.0, 80.0));
    }

    #[test]
    fn degenerate_boxes_rejected() {
        for (w, h) in [(0.0, 1.0), (1.0, -2.0), (f64::NAN, 1.0)] {
            assert!(matches!(
                box_to_polypoints(&DetectionBox::new(0.0, 0.0, w, h, 1.0)),
                Err(GeometryError::DegenerateBox { .. })
            ));
        }
    }

    #[test]
    fn fit_box_cases() {
        let single = fit_box(&PolyPointSet::new(vec![Point2::new(4.0, 7.0)])).unwrap();
        assert_eq!((single.x, single.y, single.w, single.h), (3.5, 6.5, 1.0, 1.0));
        let two = fit_box(&PolyPointSet::new(vec![Point2::new(1.0, 2.0), Point2::new(5.0, 9.0)])).unwrap();
        assert_eq!((two.x, two.y, two.w, two.h), (1.0, 2.0, 4.0, 7.0));
        assert!(matches!(
            fit_box(&PolyPointSet::new(vec![])),
            Err(GeometryError::EmptySet)
        ));
    }

    #[test]
    fn fit_box_inherits_provenance() {
        let b = DetectionBox::new(2.0, 3.0, 6.0, 9.0, 0.77).with_source("yolo");
        let back = fit_box(&box_to_polypoints(&b).unwrap()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn iou_cases() {
        let a = DetectionBox::new(0.0, 0.0, 2.0, 2.0, 1.0);
        let b = DetectionBox::new(1.0, 0.0, 2.0, 2.0, 1.0);
        let far = DetectionBox::new(5.0, 5.0, 1.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &far), 0.0);
        assert!((iou(&a, &b) - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(iou(&a, &b), iou(&b, &a));
    }

    #[test]
    fn nms_cases() {
        let hi = DetectionBox::new(0.0, 0.0, 4.0, 4.0, 0.9);
        let lo = DetectionBox::new(0.0, 0.0, 4.0, 4.0, 0.8);
        assert_eq!(nms(&[lo.clone(), hi.clone()], 0.4), vec![hi.clone()]);
        let far = DetectionBox::new(10.0, 10.0, 4.0, 4.0, 0.95);
        assert_eq!(nms(&[lo.clone(), far.clone()], 0.4), vec![far, lo]);
        assert!(nms(&[], 0.4).is_empty());
    }

    #[test]
    fn nms_tie_break_prefers_lower_fragment() {
        let mut a = DetectionBox::new(1.0, 0.0, 4.0, 4.0, 0.5);
        a.fragment = Some(2);
        let mut b = DetectionBox::new(0.0, 0.0, 4.0, 4.0, 0.5);
        b.fragment = Some(1);
        assert_eq!(nms(&[a.clone(), b.clone()], 0.4), vec![b.clone()]);
        a.fragment = Some(1);
        assert_eq!(nms(&[a, b.clone()], 0.4), vec![b]);
    }
}
