use log::warn;

use crate::geometry::{
    box_to_polypoints, fit_box, fragment_to_omni, nms, warp_polypoints, DetectionBox, FragmentMap, Point2,
};

use super::{pose_to_box, FragmentDetections, PoseBoxRule, PoseDetection};

pub const DEFAULT_NMS_THRESHOLD: f64 = 0.4;

/// One provider's output for a frame together with the maps it ran on.
#[derive(Clone, Copy, Debug)]
pub struct Harvest<'a> {
    pub source: &'a str,
    pub maps: &'a [FragmentMap],
    pub detections: &'a [FragmentDetections],
    pub pose_rule: PoseBoxRule,
}

impl<'a> Harvest<'a> {
    pub fn new(source: &'a str, maps: &'a [FragmentMap], detections: &'a [FragmentDetections]) -> Self {
        Self {
            source,
            maps,
            detections,
            pose_rule: PoseBoxRule::default(),
        }
    }
}

fn box_to_omni(b: &DetectionBox, map: &FragmentMap) -> Option<DetectionBox> {
    let pps = box_to_polypoints(b).ok()?;
    let mut out = fit_box(&warp_polypoints(&pps, map)).ok()?;
    out.fragment = Some(map.fragment_index);
    Some(out)
}

fn pose_to_omni(pose: &PoseDetection, map: &FragmentMap, rule: &PoseBoxRule) -> Option<DetectionBox> {
    let (mx, my) = ((map.width - 1) as f64, (map.height - 1) as f64);
    let mut warped = pose.clone();
    warped.keypoints.retain(|k| k.confidence >= rule.min_confidence);
    for k in &mut warped.keypoints {
        let clamped = Point2::new(k.point.x.clamp(0.0, mx), k.point.y.clamp(0.0, my));
        k.point = fragment_to_omni(clamped, map).ok()?;
    }
    pose_to_box(&warped, rule).ok()
}

/// Warps every provider's fragment detections onto the omni image, pools
/// them and runs one NMS pass. Poses become boxes after their keypoints are
/// warped, so the box is tight in omni space.
pub fn fuse_to_omni(harvests: &[Harvest<'_>], nms_threshold: f64) -> Vec<DetectionBox> {
    let mut pooled = Vec::new();
    for h in harvests {
        for det in h.detections {
            let Some(map) = h.maps.iter().find(|m| m.fragment_index == det.fragment_index) else {
                warn!(
                    "{}: no map for fragment {}, detections ignored",
                    h.source, det.fragment_index
                );
                continue;
            };
            for b in &det.boxes {
                match box_to_omni(b, map) {
                    Some(mut o) => {
                        if o.source.is_empty() {
                            o.source = h.source.to_string();
                        }
                        pooled.push(o);
                    }
                    None => warn!("{}: skipping unusable box {:?}", h.source, b),
                }
            }
            for p in &det.poses {
                if let Some(mut o) = pose_to_omni(p, map, &h.pose_rule) {
                    o.source = h.source.to_string();
                    pooled.push(o);
                }
            }
        }
    }
    nms(&pooled, nms_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_fragment_maps, iou, omni_to_fragment, OmniCameraModel, UnwarpConfig};
    use crate::label::Keypoint;

    fn maps(k: usize, overlap: f64) -> Vec<FragmentMap> {
        let cam = OmniCameraModel::centered(400, 400, 40.0, 190.0);
        let cfg = UnwarpConfig {
            k,
            overlap,
            fragment_height: 120,
            ..Default::default()
        };
        build_fragment_maps(&cam, &cfg).unwrap()
    }

    fn frag_box(frag: usize, x: f64, y: f64, w: f64, h: f64, s: f64) -> FragmentDetections {
        let mut b = DetectionBox::new(x, y, w, h, s).with_source("yolo");
        b.fragment = Some(frag);
        FragmentDetections {
            fragment_index: frag,
            boxes: vec![b],
            poses: vec![],
        }
    }

    #[test]
    fn one_box_one_fragment() {
        let m = maps(3, 0.1);
        let dets = [frag_box(1, 50.0, 20.0, 30.0, 60.0, 0.8)];
        let out = fuse_to_omni(&[Harvest::new("yolo", &m, &dets)], DEFAULT_NMS_THRESHOLD);
        assert_eq!(out.len(), 1);
        assert_eq!((out[0].score, out[0].source.as_str()), (0.8, "yolo"));
        // The box centre in fragment space lands inside the fused box.
        let c = fragment_to_omni(Point2::new(65.0, 50.0), &m[1]).unwrap();
        assert!(out[0].contains(c));
    }

    #[test]
    fn duplicate_in_overlap_collapses() {
        let m = maps(3, 0.25);
        // A person centred on the boundary between fragments 0 and 1.
        let centre = Point2::new(
            200.0 + 120.0 * (2.0f64 * std::f64::consts::PI / 3.0).cos(),
            200.0 + 120.0 * (2.0f64 * std::f64::consts::PI / 3.0).sin(),
        );
        let hits = omni_to_fragment(centre, &m);
        assert_eq!(hits.len(), 2);
        let dets: Vec<FragmentDetections> = hits
            .iter()
            .map(|&(f, p)| frag_box(f, p.x - 12.0, p.y - 25.0, 24.0, 50.0, 0.7 + 0.1 * f as f64))
            .collect();
        let out = fuse_to_omni(&[Harvest::new("yolo", &m, &dets)], DEFAULT_NMS_THRESHOLD);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn separate_people_and_pose_pooling() {
        let m = maps(2, 0.1);
        let boxes = [frag_box(0, 40.0, 20.0, 30.0, 60.0, 0.9)];
        let mut pose_dets = frag_box(1, 0.0, 0.0, 1.0, 1.0, 0.0);
        pose_dets.boxes.clear();
        pose_dets.poses.push(PoseDetection {
            keypoints: vec![Keypoint::new(100.0, 20.0, 0.9), Keypoint::new(110.0, 80.0, 0.7)],
            fragment_index: 1,
        });
        let poses = [pose_dets];
        let out = fuse_to_omni(
            &[Harvest::new("yolo", &m, &boxes), Harvest::new("pose", &m, &poses)],
            DEFAULT_NMS_THRESHOLD,
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out[1].source, "pose");
        assert!((out[1].score - 0.8).abs() < 1e-12);
        assert!(iou(&out[0], &out[1]) <= DEFAULT_NMS_THRESHOLD);
    }
}
