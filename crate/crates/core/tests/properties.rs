mod oracles;

use std::f64::consts::TAU;

use omnicount_core::eval::{average_precision, match_points, pr_curve, MatchSample, Verdict};
use omnicount_core::frame::OmniFrame;
use omnicount_core::geometry::omap::{decode_fragment_map, encode_fragment_map};
use omnicount_core::geometry::{
    build_fragment_maps, fragment_to_omni, iou, nms, omni_to_fragment, DetectionBox, OmniCameraModel, Point2,
    UnwarpConfig,
};
use omnicount_core::label::{
    fuse_to_omni, read_annotations_from, select_threshold_f1, write_annotations_to, CountFilterState, FilterDecision,
    FragmentDetections, FrameAnnotation, Harvest, NormBox,
};
use omnicount_core::temporal::{interlace, FrameRing, InterlacingKernel};
use proptest::collection::{hash_set, vec};
use proptest::prelude::*;

use oracles::*;

fn camera_and_config() -> impl Strategy<Value = (OmniCameraModel, UnwarpConfig)> {
    (
        100usize..900,
        -0.04f64..0.04,
        -0.04f64..0.04,
        0.05f64..0.3,
        0.38f64..0.5,
        1usize..=6,
        prop::sample::select(vec![0.0, 0.1, 0.25]),
        0.3f64..=1.0,
        8usize..120,
    )
        .prop_map(|(size, ox, oy, rin, rout, k, overlap, y_b, fragment_height)| {
            let mut cam = OmniCameraModel::centered(size, size, rin * size as f64, rout * size as f64);
            cam.center_x += ox * size as f64;
            cam.center_y += oy * size as f64;
            let cfg = UnwarpConfig {
                k,
                overlap,
                y_b,
                fragment_height,
                fragment_width: None,
            };
            (cam, cfg)
        })
}

fn small_box() -> impl Strategy<Value = DetectionBox> {
    (0.0f64..200.0, 0.0f64..200.0, 1.0f64..60.0, 1.0f64..60.0)
        .prop_map(|(x, y, w, h)| DetectionBox::new(x, y, w, h, 0.0))
}

fn scored_boxes(max: usize) -> impl Strategy<Value = Vec<DetectionBox>> {
    (0usize..=max)
        .prop_flat_map(|n| (vec(small_box(), n), hash_set(0u32..1_000_000, n)))
        .prop_map(|(mut boxes, scores)| {
            for (b, s) in boxes.iter_mut().zip(scores) {
                b.score = s as f64 / 1_000_000.0;
            }
            boxes
        })
}

fn samples() -> impl Strategy<Value = (Vec<MatchSample>, usize)> {
    (
        vec(
            (0u8..20, any::<bool>()).prop_map(|(s, tp)| MatchSample {
                score: s as f64 / 20.0,
                verdict: if tp { Verdict::Tp } else { Verdict::Fp },
                frame_index: 0,
            }),
            1..60,
        ),
        0usize..6,
    )
}

fn finite_f64() -> impl Strategy<Value = f64> {
    use prop::num::f64::{NEGATIVE, NORMAL, POSITIVE, SUBNORMAL, ZERO};
    POSITIVE | NEGATIVE | NORMAL | SUBNORMAL | ZERO
}

fn annotation() -> impl Strategy<Value = FrameAnnotation> {
    let unit = 0.0f64..=1.0;
    let norm_box = (unit.clone(), unit.clone(), unit.clone(), unit.clone(), unit.clone())
        .prop_map(|(cx, cy, w, h, score)| NormBox::from([cx, cy, w, h, score]));
    (
        any::<u64>(),
        finite_f64(),
        any::<bool>(),
        vec(norm_box, 0..8),
        prop::option::of(vec((unit.clone(), unit).prop_map(|(x, y)| [x, y]), 0..5)),
        prop::option::of("\\PC{0,30}"),
    )
        .prop_map(|(frame, ts, accepted, boxes, points, error)| FrameAnnotation {
            frame,
            ts,
            accepted,
            boxes,
            points,
            error,
        })
}

fn annotation_bits(a: &FrameAnnotation) -> Vec<u64> {
    let mut bits = vec![a.frame, a.ts.to_bits()];
    for b in &a.boxes {
        bits.extend([b.cx, b.cy, b.w, b.h, b.score].map(f64::to_bits));
    }
    for p in a.points.iter().flatten() {
        bits.extend(p.map(f64::to_bits));
    }
    bits
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omni_fragment_round_trip((cam, cfg) in camera_and_config(), pts in vec((0.0f64..1.0, 0.0f64..TAU), 1..50)) {
        let maps = build_fragment_maps(&cam, &cfg).unwrap();
        let (r_lo, r_hi) = cfg.radial_band(&cam);
        for (u, theta) in pts {
            let r = r_lo + u * (r_hi - r_lo);
            let p = Point2::new(cam.center_x + r * theta.cos(), cam.center_y + r * theta.sin());
            let hits = omni_to_fragment(p, &maps);
            prop_assert!(!hits.is_empty(), "no fragment sees {:?}", p);
            for (i, q) in hits {
                let back = fragment_to_omni(q, &maps[i]).unwrap();
                prop_assert!(back.dist(p) <= 0.5, "fragment {} returned {:?} for {:?}", i, back, p);
            }
        }
    }

    #[test]
    fn fragment_map_file_round_trip((cam, mut cfg) in camera_and_config()) {
        cfg.fragment_height = cfg.fragment_height.min(40);
        for map in build_fragment_maps(&cam, &cfg).unwrap() {
            let bytes = encode_fragment_map(&map);
            let back = decode_fragment_map(&bytes).unwrap();
            prop_assert_eq!(&back, &map);
            prop_assert_eq!(encode_fragment_map(&back), bytes);
        }
    }

    #[test]
    fn nms_matches_reference(boxes in scored_boxes(100), thr in prop::sample::select(vec![0.0, 0.2, 0.4, 0.7])) {
        prop_assert_eq!(nms(&boxes, thr), nms_ref(&boxes, thr));
    }

    #[test]
    fn nms_output_is_pairwise_separated(boxes in scored_boxes(60)) {
        let kept = nms(&boxes, 0.4);
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                prop_assert!(iou(a, b) <= 0.4);
            }
        }
    }

    #[test]
    fn ap_matches_reference((s, fneg) in samples()) {
        let ap = average_precision(&pr_curve(&s, fneg).unwrap());
        prop_assert!((ap - ap_ref(&s, fneg)).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&ap));
    }

    #[test]
    fn threshold_matches_exhaustive_scan((s, fneg) in samples()) {
        let got = select_threshold_f1(&s, fneg).unwrap();
        let (t, f1) = best_threshold_ref(&s, fneg);
        prop_assert_eq!(got.threshold, t);
        prop_assert_eq!(got.f1, f1);
    }

    #[test]
    fn point_matching_is_optimal(
        dets in vec((0.0f64..20.0, 0.0f64..20.0, 1.0f64..15.0, 1.0f64..15.0, 0u8..4), 0..=8),
        heads in vec((0.0f64..30.0, 0.0f64..30.0), 0..=8),
    ) {
        let dets: Vec<DetectionBox> = dets.into_iter().map(|(x, y, w, h, s)| DetectionBox::new(x, y, w, h, s as f64 / 4.0)).collect();
        let heads: Vec<Point2> = heads.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        let m = match_points(&dets, &heads, 0);
        prop_assert_eq!(m.true_positives(), optimal_point_matches(&dets, &heads));
        prop_assert_eq!(m.true_positives() + m.false_negatives, heads.len());
    }

    #[test]
    fn matching_ignores_input_order(
        dets in vec((0.0f64..20.0, 0.0f64..20.0, 1.0f64..15.0, 1.0f64..15.0, 0u8..3), 0..=10),
        heads in vec((0.0f64..30.0, 0.0f64..30.0), 0..=10),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let dets: Vec<DetectionBox> = dets.into_iter().map(|(x, y, w, h, s)| DetectionBox::new(x, y, w, h, s as f64 / 3.0)).collect();
        let heads: Vec<Point2> = heads.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        let mut shuffled = dets.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let key = |m: omnicount_core::eval::FrameMatch| {
            let mut v: Vec<(u64, bool)> = m.samples.iter().map(|s| (s.score.to_bits(), s.verdict == Verdict::Tp)).collect();
            v.sort();
            (v, m.false_negatives)
        };
        prop_assert_eq!(key(match_points(&dets, &heads, 0)), key(match_points(&shuffled, &heads, 0)));
    }

    #[test]
    fn annotations_round_trip_bit_exact(anns in vec(annotation(), 0..20)) {
        let mut buf = Vec::new();
        write_annotations_to(&anns, &mut buf).unwrap();
        let back = read_annotations_from(&buf[..], "mem").unwrap();
        prop_assert_eq!(&back, &anns);
        for (a, b) in anns.iter().zip(&back) {
            prop_assert_eq!(annotation_bits(a), annotation_bits(b));
        }
    }

    #[test]
    fn interlace_copies_from_the_named_frame(
        cells in [[0u32..4, 0u32..4], [0u32..4, 0u32..4]],
        zero_at in 0usize..4,
        t in 1u32..=3,
        w in 1usize..12,
        h in 1usize..12,
    ) {
        let mut cells = cells;
        cells[zero_at / 2][zero_at % 2] = 0;
        let kernel = InterlacingKernel::new("k", cells, t).unwrap();
        let depth = kernel.max_age() + 1;
        let mut ring = FrameRing::new(depth, 15.0);
        // The frame at age a is filled with 200 - 10a.
        for i in 0..depth {
            let age = depth - 1 - i;
            ring.push_frame(OmniFrame::filled(w, h, 1, (200 - 10 * age) as u8).with_stamp(i as u64, i as f64 / 15.0)).unwrap();
        }
        let out = interlace(&ring, &kernel).unwrap();
        prop_assert_eq!((out.width(), out.height()), (2 * w, 2 * h));
        for y in 0..2 * h {
            for x in 0..2 * w {
                let age = (t * cells[y % 2][x % 2]) as usize;
                prop_assert_eq!(out.get(x, y, 0), (200 - 10 * age) as u8);
            }
        }
    }

    #[test]
    fn count_filter_rules(counts in vec(0usize..6, 1..80), window in 1usize..20, tol in 0usize..2, constant in 0usize..5) {
        let mut f = CountFilterState::new(window, tol);
        for c in counts {
            let before = f.clone();
            if f.observe(c) == FilterDecision::Drop {
                prop_assert_eq!(&f, &before);
            }
            prop_assert!(f.window().count() <= window);
        }
        let mut g = CountFilterState::new(window, 0);
        prop_assert!((0..50).all(|_| g.observe(constant) == FilterDecision::Accept));
    }

    #[test]
    fn fused_boxes_are_pairwise_separated(
        raw in vec((0usize..3, 0.0f64..150.0, 0.0f64..70.0, 3.0f64..40.0, 3.0f64..40.0, 0.0f64..1.0), 0..25),
    ) {
        let cam = OmniCameraModel::centered(400, 400, 40.0, 190.0);
        let maps = build_fragment_maps(&cam, &UnwarpConfig { fragment_height: 100, ..Default::default() }).unwrap();
        let mut dets: Vec<FragmentDetections> = (0..3).map(|i| FragmentDetections { fragment_index: i, ..Default::default() }).collect();
        for (f, x, y, w, h, s) in raw {
            let mut b = DetectionBox::new(x, y, w, h, s);
            b.fragment = Some(f);
            dets[f].boxes.push(b);
        }
        let out = fuse_to_omni(&[Harvest::new("p", &maps, &dets)], 0.4);
        for (i, a) in out.iter().enumerate() {
            for b in &out[i + 1..] {
                prop_assert!(iou(a, b) <= 0.4);
            }
        }
    }
}
